#include "figrelabel/cli.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "figrelabel/vm.hpp"

namespace figrelabel {

namespace {

struct IoFailure {
  std::string message;
};

struct UsageFailure {
  std::string message;
};

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure{"cannot read '" + path + "'"};
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoFailure{"error reading '" + path + "'"};
  return buf.str();
}

void write_file(const std::string &path, const std::string &data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure{"cannot write '" + path + "'"};
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoFailure{"error writing '" + path + "'"};
}

std::uint64_t parse_steps(std::string_view text, std::string_view source) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size() || v == 0)
    throw UsageFailure{std::string(source) + " must be a positive integer, got '" +
                       std::string(text) + "'"};
  return v;
}

VmConfig vm_config(const CliOptions &opts) {
  VmConfig cfg;
  cfg.save_restore_mode = opts.compat_save_restore ? SaveRestoreMode::Neutered
                                                   : SaveRestoreMode::Faithful;
  cfg.unknown_operator_mode = opts.permissive ? UnknownOperatorMode::PermissiveNoop
                                              : UnknownOperatorMode::Error;
  if (opts.max_steps) {
    cfg.max_steps = *opts.max_steps;
  } else if (const char *env = std::getenv("FIGRELABEL_MAX_STEPS"); env && *env) {
    cfg.max_steps = parse_steps(env, "FIGRELABEL_MAX_STEPS");
  }
  return cfg;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void print_warnings(const std::string &file, const std::vector<Warning> &warnings,
                    std::ostream &err) {
  for (const auto &w : warnings) {
    err << "figrelabel: warning: " << file;
    if (w.pos.line > 0) err << ":" << w.pos.line;
    err << ": " << w.message << "\n";
  }
}

struct Figure {
  std::string bytes;
  ExtractionResult extraction;
};

Figure load_figure(const CliOptions &opts, std::ostream &err) {
  Figure fig;
  fig.bytes = read_file(opts.input);
  VmConfig cfg = vm_config(opts);
  fig.extraction = execute(tokenize(fig.bytes), cfg);
  print_warnings(opts.input, fig.extraction.warnings, err);
  return fig;
}

// Runs `body`, mapping each failure class onto its exit code.
template <class F>
int guarded(const CliOptions &opts, std::ostream &err, F &&body) {
  try {
    return body();
  } catch (const IoFailure &e) {
    err << "figrelabel: error: " << e.message << "\n";
    return kExitIo;
  } catch (const UsageFailure &e) {
    err << "figrelabel: error: " << e.message << "\n";
    return kExitParseOrVm;
  } catch (const SyntaxError &e) {
    err << "figrelabel: error: " << opts.input << ": " << e.what() << "\n";
    return kExitParseOrVm;
  } catch (const VmError &e) {
    err << "figrelabel: error: " << opts.input << ": " << e.what() << "\n";
    return kExitParseOrVm;
  } catch (const SpecError &e) {
    err << "figrelabel: error: " << opts.spec_path << ": " << e.what() << "\n";
    return kExitParseOrVm;
  } catch (const EmitError &e) {
    err << "figrelabel: error: " << e.what() << "\n";
    return kExitParseOrVm;
  }
}

}  // namespace

int run_extract(const CliOptions &opts, std::ostream &out, std::ostream &err) {
  return guarded(opts, err, [&] {
    Figure fig = load_figure(opts, err);
    std::string listing = emit_label_listing(fig.extraction.labels, opts.format);
    if (opts.output) write_file(*opts.output, listing);
    else out << listing;
    return kExitOk;
  });
}

int run_check(const CliOptions &opts, std::ostream &out, std::ostream &err) {
  return guarded(opts, err, [&] {
    Figure fig = load_figure(opts, err);
    RelabelSpec spec = parse_spec(read_file(opts.spec_path));
    resolve(spec, fig.extraction.labels, parse_dsc(fig.bytes), false);

    const LabelTable &table = fig.extraction.labels;
    std::size_t total = 0, found = 0;
    for (const auto &d : spec.directives) {
      const auto *r = std::get_if<Relabel>(&d);
      if (!r) continue;
      ++total;
      std::string shown = escape_label_bytes(r->old_label);
      std::vector<std::size_t> seqs = table.matches(r->old_label);
      if (seqs.empty()) {
        out << "NOT FOUND\t" << shown << "\n";
        continue;
      }
      ++found;
      Point a = table.records()[seqs.front()].anchor;
      if (seqs.size() == 1) {
        out << "FOUND\t" << shown << "\t" << fixed6(a.x) << "\t" << fixed6(a.y) << "\n";
        continue;
      }
      std::string list;
      for (std::size_t s : seqs) list += (list.empty() ? "" : ",") + std::to_string(s);
      out << "DUPLICATE\t" << shown << "\t" << fixed6(a.x) << "\t" << fixed6(a.y)
          << "\tseqs " << list << " (first occurrence used)\n";
      err << "figrelabel: warning: label \"" << shown << "\" was shown "
          << seqs.size() << " times; using the first occurrence\n";
    }
    err << "figrelabel: " << found << "/" << total << " labels found\n";
    if (found < total && !opts.lenient) return kExitUnmatched;
    return kExitOk;
  });
}

int run_apply(const CliOptions &opts, std::ostream &out, std::ostream &err) {
  return guarded(opts, err, [&] {
    Figure fig = load_figure(opts, err);
    RelabelSpec spec = parse_spec(read_file(opts.spec_path));
    EmitPlan plan = resolve(spec, fig.extraction.labels, parse_dsc(fig.bytes),
                            opts.keep_unmatched_labels);
    for (const auto &u : plan.unmatched)
      err << "figrelabel: warning: label \"" << escape_label_bytes(u)
          << "\" not found in " << opts.input << "; no replacement placed\n";

    std::string eps = emit_relabeled_eps(fig.bytes, plan, spec);
    if (opts.output) write_file(*opts.output, eps);
    else out << eps;
    if (opts.emit_overlay) write_file(*opts.emit_overlay, emit_tex_overlay(plan));

    if (!plan.unmatched.empty() && !opts.lenient) return kExitUnmatched;
    return kExitOk;
  });
}

int run_cli(int argc, const char *const *argv, std::ostream &out,
            std::ostream &err) {
  CliOptions opts;
  std::string format = "tsv";
  std::string output, overlay;
  std::uint64_t max_steps = 0;

  CLI::App app{"Find and replace text labels in EPS figures", "figrelabel"};
  app.require_subcommand(1);

  auto add_common = [&](CLI::App *cmd) {
    cmd->add_option("input", opts.input, "EPS figure")->required();
    cmd->add_flag("--permissive", opts.permissive,
                  "skip undefined names with a warning instead of failing");
    cmd->add_flag("--compat-save-restore", opts.compat_save_restore,
                  "make save/restore no-ops while extracting");
    cmd->add_option("--max-steps", max_steps, "interpreter step budget")
        ->check(CLI::PositiveNumber);
  };

  CLI::App *extract = app.add_subcommand("extract", "list the labels a figure shows");
  add_common(extract);
  extract->add_option("--format", format, "tsv or json")
      ->check(CLI::IsMember({"tsv", "json"}));
  extract->add_option("-o,--output", output, "write the listing here");

  CLI::App *check = app.add_subcommand("check", "check a relabel spec against a figure");
  add_common(check);
  check->add_option("--spec", opts.spec_path, "relabel spec")->required();
  check->add_flag("--lenient", opts.lenient, "exit 0 even if labels are missing");

  CLI::App *apply = app.add_subcommand("apply", "write the relabeled figure");
  add_common(apply);
  apply->add_option("--spec", opts.spec_path, "relabel spec")->required();
  apply->add_option("-o,--output", output, "output EPS (default stdout)");
  apply->add_flag("--keep-unmatched-labels", opts.keep_unmatched_labels,
                  "keep painting figure labels that no directive replaces");
  apply->add_flag("--lenient", opts.lenient, "exit 0 even if labels are missing");
  apply->add_option("--emit-overlay", overlay, "also write label coordinates here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    err << "figrelabel: error: " << e.what() << "\n";
    return kExitParseOrVm;
  }

  opts.format = format == "json" ? ListingFormat::json : ListingFormat::tsv;
  if (!output.empty()) opts.output = output;
  if (!overlay.empty()) opts.emit_overlay = overlay;
  if (max_steps > 0) opts.max_steps = max_steps;

  if (extract->parsed()) {
    opts.command = Command::extract;
    return run_extract(opts, out, err);
  }
  if (check->parsed()) {
    opts.command = Command::check;
    return run_check(opts, out, err);
  }
  opts.command = Command::apply;
  return run_apply(opts, out, err);
}

}  // namespace figrelabel

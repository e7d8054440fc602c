#include "oracle.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace figrelabel::test {

const std::string_view kSetupPrologue =
    R"PS((MTG set-up) pop userdict /MTGdict 99 dict put MTGdict begin
  /Mshow {[ MTGdict /rllist get aload length 2 add -1 roll
    currentpoint transform ] MTGdict /rllist 3 2 roll put} def
  /findlabel {/sought exch def
    /MTGx 3 index def /MTGy 2 index def aload length 3 idiv dup 0 eq
      {pop}
      {{2 index sought eq
          {/MTGy exch def /MTGx exch def pop}
          {pop pop pop}
        ifelse}
      repeat}
    ifelse exch MTGx exch sub exch MTGy exch sub idtransform translate
    } def
  end
)PS";

const std::string_view kTakeover =
    R"PS((MTG takes control) pop 
    /MTGsavestate save def /p /show load def MTGdict begin gsave
    /rllist [] def /save {false} def /restore {pop} def /show {Mshow} def
    /ashow {Mshow pop pop} def /widthshow {Mshow pop pop pop} def /awidthshow
    {Mshow 5 {pop} repeat} def /xshow {pop Mshow} def /yshow {pop Mshow} def
    /xyshow {pop Mshow} def /cshow {Mshow pop} def /kshow {Mshow pop} def
/a {moveto} bind def
)PS";

std::string takeover_without_save_neutering() {
  std::string text(kTakeover);
  const std::string neuter = "/save {false} def /restore {pop} def ";
  auto at = text.find(neuter);
  if (at == std::string::npos) throw std::logic_error("takeover text changed");
  text.erase(at, neuter.size());
  return text;
}

std::string fixture_path(std::string_view name) {
  return std::string(FIGRELABEL_FIXTURE_DIR) + "/" + std::string(name);
}

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string read_fixture(std::string_view name) { return read_file(fixture_path(name)); }

const std::vector<std::string> &spec_fixtures() {
  static const std::vector<std::string> names = {
      "example_doc", "two_labels",  "duplicates",      "transformed",
      "rotated",       "xfig_style",  "gnuplot_style",   "save_restore",
      "all_show_family", "escapes",   "loops",           "consecutive",
      "nested_gsave",  "no_labels",
  };
  return names;
}

std::vector<Triple> triples(const LabelTable &table) {
  std::vector<Triple> out;
  for (const auto &r : table.records()) out.push_back({r.bytes, r.anchor.x, r.anchor.y});
  return out;
}

namespace {

VmConfig plain_config(SaveRestoreMode mode) {
  VmConfig cfg;
  cfg.save_restore_mode = mode;
  cfg.intercept_shows = false;
  return cfg;
}

void run_prologue(Vm &vm, SaveRestoreMode mode) {
  vm.run_source(kSetupPrologue);
  if (mode == SaveRestoreMode::Neutered) vm.run_source(kTakeover);
  else vm.run_source(takeover_without_save_neutering());
}

std::vector<Triple> read_rllist(Vm &vm) {
  vm.run_source("MTGdict /rllist get");
  const PsObject &top = vm.operand_stack().back();
  if (!top.is<PsArray>()) throw std::runtime_error("rllist is not an array");
  const ObjectList &items = *top.as<PsArray>().items;
  if (items.size() % 3 != 0) throw std::runtime_error("rllist length not a multiple of 3");
  std::vector<Triple> out;
  for (std::size_t k = 0; k < items.size(); k += 3) {
    if (!items[k].is<PsString>() || !items[k + 1].is<double>() ||
        !items[k + 2].is<double>())
      throw std::runtime_error("malformed rllist triple");
    out.push_back({*items[k].as<PsString>().bytes, items[k + 1].as<double>(),
                   items[k + 2].as<double>()});
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<Triple> prologue_triples(std::string_view body, SaveRestoreMode mode) {
  Vm vm(plain_config(mode));
  run_prologue(vm, mode);
  vm.run_source(body);
  return read_rllist(vm);
}

std::vector<Triple> native_triples(std::string_view body, SaveRestoreMode mode) {
  VmConfig cfg;
  cfg.save_restore_mode = mode;
  return triples(execute(tokenize(body), cfg).labels);
}

bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

bool same_bits(const Matrix &a, const Matrix &b) {
  return same_bits(a.a, b.a) && same_bits(a.b, b.b) && same_bits(a.c, b.c) &&
         same_bits(a.d, b.d) && same_bits(a.tx, b.tx) && same_bits(a.ty, b.ty);
}

std::string compare_triples(const std::vector<Triple> &expected,
                            const std::vector<Triple> &actual) {
  if (expected.size() != actual.size())
    return "expected " + std::to_string(expected.size()) + " triples, got " +
           std::to_string(actual.size());
  for (std::size_t k = 0; k < expected.size(); ++k) {
    const Triple &e = expected[k];
    const Triple &a = actual[k];
    if (e.bytes != a.bytes || !same_bits(e.x, a.x) || !same_bits(e.y, a.y))
      return "triple " + std::to_string(k) + ": expected (" + escape_label_bytes(e.bytes) +
             ", " + fmt(e.x) + ", " + fmt(e.y) + ") got (" +
             escape_label_bytes(a.bytes) + ", " + fmt(a.x) + ", " + fmt(a.y) + ")";
  }
  return "";
}

FindlabelProbe probe_findlabel(std::string_view body, std::string_view sought,
                               Point user) {
  Vm vm(plain_config(SaveRestoreMode::Neutered));
  run_prologue(vm, SaveRestoreMode::Neutered);
  vm.run_source(body);
  vm.run_source("gsave");

  FindlabelProbe probe;
  probe.before = vm.graphics_state().ctm;
  vm.run_source(fmt(user.x) + " " + fmt(user.y) + " transform MTGdict /rllist get (" +
                escape_ps_string(sought) + ") findlabel");
  probe.after = vm.graphics_state().ctm;

  VmConfig cfg;
  cfg.save_restore_mode = SaveRestoreMode::Neutered;
  LabelTable native = execute(tokenize(body), cfg).labels;
  Point device = transform_point(probe.before, user);
  Point target = native.find_label(sought, device).point;
  Point delta = idtransform_delta(probe.before, target - device);
  probe.expected =
      concat_matrix(probe.before, Matrix::translation(delta.x, delta.y));
  return probe;
}

std::vector<std::string> check_self_consistency(std::string_view eps,
                                                std::string_view spec_text,
                                                bool keep_unmatched) {
  std::vector<std::string> problems;
  RelabelSpec spec = parse_spec(spec_text);
  LabelTable original = execute(tokenize(eps)).labels;
  EmitPlan plan = resolve(spec, original, parse_dsc(eps), keep_unmatched);
  std::string rewritten = emit_relabeled_eps(eps, plan, spec);
  LabelTable after = execute(tokenize(rewritten)).labels;

  std::vector<LabelRecord> survivors;
  std::size_t k = 0;
  const auto &records = after.records();
  std::size_t n_survivors = records.size() >= plan.placements.size()
                                ? records.size() - plan.placements.size()
                                : 0;
  for (; k < n_survivors; ++k) survivors.push_back(records[k]);

  for (std::size_t p = 0; p < plan.placements.size(); ++p, ++k) {
    const Placement &want = plan.placements[p];
    if (k >= records.size()) {
      problems.push_back("placement '" + want.text + "' missing from output");
      continue;
    }
    Point t = want.target() * plan.scale;
    const LabelRecord &got = records[k];
    if (got.bytes != want.text || std::abs(got.anchor.x - t.x) > 1e-6 ||
        std::abs(got.anchor.y - t.y) > 1e-6)
      problems.push_back("placement " + std::to_string(p) + ": expected '" + want.text +
                         "' at " + fmt(t.x) + "," + fmt(t.y) + " got '" + got.bytes +
                         "' at " + fmt(got.anchor.x) + "," + fmt(got.anchor.y));
  }

  if (!keep_unmatched) {
    for (const auto &s : survivors)
      problems.push_back("original label '" + escape_label_bytes(s.bytes) + "' survived");
    return problems;
  }

  const auto &replaced = std::get<SuppressedLabels>(plan.suppress);
  std::map<std::string, int> expected, actual;
  for (const auto &r : original.records())
    if (!replaced.count(r.bytes)) ++expected[r.bytes];
  for (const auto &s : survivors) ++actual[s.bytes];
  if (expected != actual) {
    std::string e, a;
    for (const auto &[b, c] : expected) e += " " + escape_label_bytes(b) + "x" + std::to_string(c);
    for (const auto &[b, c] : actual) a += " " + escape_label_bytes(b) + "x" + std::to_string(c);
    problems.push_back("surviving labels:" + a + "; expected:" + e);
  }
  return problems;
}

}  // namespace figrelabel::test

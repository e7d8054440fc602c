#include "figrelabel/emit.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include <json.hpp>

namespace figrelabel {

namespace {

// Operand counts beneath and above the string for each show-family
// operator, in the order the interception table lists them.
struct ShowArity {
  const char *name;
  int below;
  int above;
};

constexpr ShowArity kShowFamily[] = {
    {"show", 0, 0},   {"ashow", 2, 0},  {"widthshow", 3, 0},
    {"awidthshow", 5, 0}, {"xshow", 0, 1}, {"yshow", 0, 1},
    {"xyshow", 0, 1}, {"cshow", 1, 0},  {"kshow", 1, 0},
};

std::string pops(int n) {
  std::string out;
  for (int k = 0; k < n; ++k) out += k ? " pop" : "pop";
  return out;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

struct Line {
  std::size_t begin;  // first byte
  std::size_t end;    // one past the last content byte
  std::size_t next;   // start of the following line
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find_first_of("\r\n", start);
    if (end == std::string_view::npos) {
      lines.push_back({start, text.size(), text.size()});
      break;
    }
    std::size_t next = end + 1;
    if (text[end] == '\r' && next < text.size() && text[next] == '\n') ++next;
    lines.push_back({start, end, next});
    start = next;
  }
  return lines;
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

bool is_dsc(std::string_view line) {
  return starts_with(line, "%%") || starts_with(line, "%!");
}

std::string scaled_bbox_line(std::string_view line, double scale) {
  constexpr std::string_view kBox = "%%BoundingBox:";
  constexpr std::string_view kHiRes = "%%HiResBoundingBox:";
  bool hires = starts_with(line, kHiRes);
  std::string_view key = hires ? kHiRes : kBox;
  std::string normalized = "%%BoundingBox:" + std::string(line.substr(key.size()));
  std::optional<BoundingBox> box;
  try {
    box = parse_bounding_box_line(normalized, SourcePos{0, 0});
  } catch (const SyntaxError &) {
    return std::string(line);
  }
  if (!box) return std::string(line);
  if (hires) {
    return std::string(kHiRes) + " " + format_ps_number(box->llx * scale) + " " +
           format_ps_number(box->lly * scale) + " " +
           format_ps_number(box->urx * scale) + " " +
           format_ps_number(box->ury * scale);
  }
  auto i = [](double v) { return std::to_string(static_cast<long long>(v)); };
  return std::string(kBox) + " " + i(std::floor(box->llx * scale)) + " " +
         i(std::floor(box->lly * scale)) + " " + i(std::ceil(box->urx * scale)) +
         " " + i(std::ceil(box->ury * scale));
}

std::string suppression_prologue(const EmitPlan &plan) {
  std::string out;
  out += "% figrelabel: original labels are suppressed below\n";
  out += "/FRLsave save def\n";
  out += "/FRLdict 300 dict def\n";
  out += "FRLdict begin\n";
  if (const auto *keep = std::get_if<SuppressedLabels>(&plan.suppress)) {
    out += "/FRLdrop " + std::to_string(std::max<std::size_t>(keep->size(), 1)) +
           " dict def\n";
    for (const auto &label : *keep)
      out += "FRLdrop (" + escape_ps_string(label) + ") true put\n";
    for (const auto &op : kShowFamily)
      out += "/FRLo_" + std::string(op.name) + " /" + op.name + " load def\n";
    for (const auto &op : kShowFamily) {
      std::string probe = op.above ? "1 index" : "dup";
      out += "/" + std::string(op.name) + " {" + probe +
             " FRLdrop exch known {" + pops(op.below + op.above + 1) +
             "} {FRLo_" + op.name + "} ifelse} bind def\n";
    }
  } else {
    for (const auto &op : kShowFamily)
      out += "/" + std::string(op.name) + " {" + pops(op.below + op.above + 1) +
             "} bind def\n";
  }
  out += "/save {false} bind def\n";
  out += "/restore {pop} bind def\n";
  out += "/showpage {} bind def\n";
  out += "gsave\n";
  if (plan.scale != 1.0)
    out += format_ps_number(plan.scale) + " " + format_ps_number(plan.scale) +
           " scale\n";
  return out;
}

bool calls_showpage(std::string_view original) {
  try {
    for (const auto &t : tokenize(original))
      if (t.kind == TokenKind::ExecutableName && t.text == "showpage") return true;
  } catch (const SyntaxError &) {
    return true;
  }
  return false;
}

std::string placement_trailer(const EmitPlan &plan, const RelabelSpec &spec,
                              bool showpage) {
  std::string out;
  out += "% figrelabel: replacement labels\n";
  out += "grestore\n";
  out += "end\n";
  out += "FRLsave restore\n";
  std::string font = "/" + spec.font_name + " findfont " +
                     format_ps_number(spec.font_size.bp()) + " scalefont setfont\n";
  for (const auto &p : plan.placements) {
    Point t = p.target() * plan.scale;
    out += font;
    out += format_ps_number(t.x) + " " + format_ps_number(t.y) + " moveto (" +
           escape_ps_string(p.text) + ") show\n";
  }
  if (showpage) out += "showpage\n";
  return out;
}

}  // namespace

const char *emit_error_kind_name(EmitErrorKind kind) {
  switch (kind) {
    case EmitErrorKind::MissingBoundingBox: return "MissingBoundingBox";
    case EmitErrorKind::DegenerateBoundingBox: return "DegenerateBoundingBox";
    case EmitErrorKind::EmptyOldLabel: return "EmptyOldLabel";
  }
  return "?";
}

EmitError::EmitError(EmitErrorKind kind, const std::string &detail)
    : std::runtime_error(std::string(emit_error_kind_name(kind)) + ": " + detail),
      kind_(kind) {}

std::string format_ps_number(double v) {
  if (v == 0) return "0";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string escape_label_bytes(std::string_view bytes) {
  std::string out;
  for (unsigned char c : bytes) {
    if (c == '\\') {
      out += "\\\\";
    } else if (c >= 32 && c <= 126) {
      out.push_back(static_cast<char>(c));
    } else {
      char buf[5];
      std::snprintf(buf, sizeof buf, "\\x%02X", c);
      out += buf;
    }
  }
  return out;
}

EmitPlan resolve(const RelabelSpec &spec, const LabelTable &table,
                 const DocumentMeta &meta, bool keep_unmatched_drawing) {
  EmitPlan plan;
  bool has_extra = false;
  for (const auto &d : spec.directives)
    has_extra = has_extra || std::holds_alternative<ExtraLabel>(d);
  if ((has_extra || spec.width) && !meta.bounding_box)
    throw EmitError(EmitErrorKind::MissingBoundingBox,
                    "the figure has no %%BoundingBox but the spec needs one");
  if (spec.width) {
    double w = meta.bounding_box->width();
    if (!(w > 0))
      throw EmitError(EmitErrorKind::DegenerateBoundingBox,
                      "cannot scale a figure of zero width");
    plan.scale = spec.width->bp() / w;
  }

  SuppressedLabels matched;
  for (const auto &d : spec.directives) {
    if (const auto *r = std::get_if<Relabel>(&d)) {
      if (r->old_label.empty())
        throw EmitError(EmitErrorKind::EmptyOldLabel, "relabel with empty old label");
      auto hit = table.lookup(r->old_label);
      if (!hit) {
        plan.unmatched.push_back(r->old_label);
        continue;
      }
      matched.insert(r->old_label);
      plan.placements.push_back(Placement{r->new_text, hit->anchor, r->dx.bp(),
                                          r->dy.bp(), Placement::Source::Relabel,
                                          r->old_label});
    } else {
      const auto &e = std::get<ExtraLabel>(d);
      const BoundingBox &box = *meta.bounding_box;
      plan.placements.push_back(Placement{e.text,
                                          {box.urx + e.x.bp(), box.lly + e.y.bp()},
                                          0, 0, Placement::Source::ExtraLabel, ""});
    }
  }
  if (keep_unmatched_drawing) plan.suppress = std::move(matched);
  else plan.suppress = SuppressAllShows{};
  return plan;
}

std::string emit_relabeled_eps(std::string_view original, const EmitPlan &plan,
                               const RelabelSpec &spec) {
  std::vector<Line> lines = split_lines(original);

  // Header: leading DSC lines, through %%EndComments when present.
  std::size_t header_end = 0;
  while (header_end < lines.size()) {
    std::string_view text = original.substr(lines[header_end].begin,
                                            lines[header_end].end - lines[header_end].begin);
    if (!is_dsc(text)) break;
    ++header_end;
    if (starts_with(text, "%%EndComments")) break;
  }

  // Replacement labels go before the document trailer.
  std::size_t insert_at = lines.size();
  for (std::size_t k = lines.size(); k-- > header_end;) {
    std::string_view text =
        original.substr(lines[k].begin, lines[k].end - lines[k].begin);
    if (starts_with(text, "%%Trailer")) {
      insert_at = k;
      break;
    }
    if (starts_with(text, "%%EOF") && insert_at == lines.size()) insert_at = k;
  }

  auto emit_line = [&](std::string &out, const Line &l) {
    std::string_view text = original.substr(l.begin, l.end - l.begin);
    std::string_view eol = original.substr(l.end, l.next - l.end);
    if (plan.scale != 1.0 && (starts_with(text, "%%BoundingBox:") ||
                              starts_with(text, "%%HiResBoundingBox:"))) {
      out += scaled_bbox_line(text, plan.scale);
    } else {
      out += text;
    }
    out += eol.empty() ? std::string_view("\n") : eol;
  };

  std::string out;
  for (std::size_t k = 0; k < header_end; ++k) emit_line(out, lines[k]);
  out += suppression_prologue(plan);
  for (std::size_t k = header_end; k < insert_at; ++k) emit_line(out, lines[k]);
  out += placement_trailer(plan, spec, calls_showpage(original));
  for (std::size_t k = insert_at; k < lines.size(); ++k) emit_line(out, lines[k]);
  return out;
}

std::string emit_label_listing(const LabelTable &table, ListingFormat format) {
  if (format == ListingFormat::tsv) {
    std::string out = "seq\tx\ty\ttext\n";
    for (const auto &r : table.records()) {
      out += std::to_string(r.seq) + "\t" + fixed6(r.anchor.x) + "\t" +
             fixed6(r.anchor.y) + "\t" + escape_label_bytes(r.bytes) + "\n";
    }
    return out;
  }
  nlohmann::json rows = nlohmann::json::array();
  for (const auto &r : table.records()) {
    rows.push_back({{"seq", r.seq},
                    {"x", r.anchor.x},
                    {"y", r.anchor.y},
                    {"text", escape_label_bytes(r.bytes)}});
  }
  return rows.dump(2) + "\n";
}

std::string emit_tex_overlay(const EmitPlan &plan) {
  std::string out;
  for (const auto &p : plan.placements) {
    Point t = p.target();
    out += "label " + fixed6(t.x) + " " + fixed6(t.y) + " " + quote_text(p.text) + "\n";
  }
  return out;
}

}  // namespace figrelabel

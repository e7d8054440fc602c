#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "figrelabel/geometry.hpp"
#include "figrelabel/label_table.hpp"
#include "figrelabel/relabel_spec.hpp"
#include "figrelabel/syntax.hpp"

namespace figrelabel {

struct Placement {
  enum class Source { Relabel, ExtraLabel };

  std::string text;
  Point anchor;  // figure coordinates, bp
  double dx = 0;
  double dy = 0;
  Source source = Source::Relabel;
  std::string old_label;  // empty for extra labels

  Point target() const { return {anchor.x + dx, anchor.y + dy}; }
};

struct SuppressAllShows {
  bool operator==(const SuppressAllShows &) const = default;
};
using SuppressedLabels = std::set<std::string>;
using Suppression = std::variant<SuppressAllShows, SuppressedLabels>;

struct EmitPlan {
  std::vector<Placement> placements;
  Suppression suppress;
  std::vector<std::string> unmatched;  // old labels with no shown string
  double scale = 1.0;
};

enum class EmitErrorKind { MissingBoundingBox, DegenerateBoundingBox, EmptyOldLabel };

const char *emit_error_kind_name(EmitErrorKind kind);

class EmitError : public std::runtime_error {
 public:
  EmitError(EmitErrorKind kind, const std::string &detail);
  EmitErrorKind kind() const { return kind_; }

 private:
  EmitErrorKind kind_;
};

/// Matches every relabel directive against the extracted labels and places
/// extra labels relative to the lower-right corner of the bounding box.
EmitPlan resolve(const RelabelSpec &spec, const LabelTable &table,
                 const DocumentMeta &meta, bool keep_unmatched_drawing);

/// Rewrites `original` so that its own labels paint nothing (or only the
/// ones not in the suppression set) and the plan's placements are painted
/// on top. A `showpage` in the figure is held back until after the
/// placements.
std::string emit_relabeled_eps(std::string_view original, const EmitPlan &plan,
                               const RelabelSpec &spec);

enum class ListingFormat { tsv, json };

std::string emit_label_listing(const LabelTable &table, ListingFormat format);

/// `label <x> <y> "<text>"` per placement, figure coordinates.
std::string emit_tex_overlay(const EmitPlan &plan);

/// Label bytes for the listing: `\` doubled, bytes outside 32..126 as `\xHH`.
std::string escape_label_bytes(std::string_view bytes);

/// Shortest exact decimal that PostScript reads back as the same double.
std::string format_ps_number(double v);

}  // namespace figrelabel

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "figrelabel/geometry.hpp"

namespace figrelabel {

struct LabelRecord {
  std::string bytes;
  Point anchor;  // device space, bp
  std::size_t seq = 0;

  bool operator==(const LabelRecord &) const = default;
};

// Which record answers a lookup when one string was shown several times.
//
// The lookup procedure this reproduces works on a flat list of
// (string, x, y) triples, appended in show order. It `aload`s the list onto
// the operand stack and then runs `n {...} repeat`, each pass inspecting the
// triple on top of the stack, i.e. the LAST remaining one. A match stores
// x and y into the result variables, overwriting any earlier match. The
// scan therefore visits triples from last-shown to first-shown and the
// final write, which is the one that sticks, comes from the first-shown
// triple.
enum class DuplicatePolicy { FirstOccurrenceWins };
inline constexpr DuplicatePolicy kDuplicatePolicy =
    DuplicatePolicy::FirstOccurrenceWins;

struct LookupResult {
  Point point;
  bool found = false;
};

class LabelTable {
 public:
  std::size_t append(std::string bytes, Point anchor);

  /// Anchor of the lowest-seq record whose bytes equal `sought`, or
  /// `fallback` unchanged when nothing matches.
  LookupResult find_label(std::string_view sought, Point fallback) const;

  std::optional<LabelRecord> lookup(std::string_view sought) const;

  /// Every matching seq, ascending.
  std::vector<std::size_t> matches(std::string_view sought) const;

  const std::vector<LabelRecord> &records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  /// Rebuilds the byte index from `records()` and compares with the live one.
  bool index_consistent() const;

 private:
  std::vector<LabelRecord> records_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> by_bytes_;
};

}  // namespace figrelabel

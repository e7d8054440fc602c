#include "figrelabel/label_table.hpp"

namespace figrelabel {

std::size_t LabelTable::append(std::string bytes, Point anchor) {
  std::size_t seq = records_.size();
  by_bytes_[bytes].push_back(seq);
  records_.push_back(LabelRecord{std::move(bytes), anchor, seq});
  return seq;
}

LookupResult LabelTable::find_label(std::string_view sought,
                                    Point fallback) const {
  static_assert(kDuplicatePolicy == DuplicatePolicy::FirstOccurrenceWins);
  auto it = by_bytes_.find(sought);
  if (it == by_bytes_.end()) return {fallback, false};
  return {records_[it->second.front()].anchor, true};
}

std::optional<LabelRecord> LabelTable::lookup(std::string_view sought) const {
  auto it = by_bytes_.find(sought);
  if (it == by_bytes_.end()) return std::nullopt;
  return records_[it->second.front()];
}

std::vector<std::size_t> LabelTable::matches(std::string_view sought) const {
  auto it = by_bytes_.find(sought);
  if (it == by_bytes_.end()) return {};
  return it->second;
}

bool LabelTable::index_consistent() const {
  std::map<std::string, std::vector<std::size_t>, std::less<>> rebuilt;
  for (const auto &r : records_) rebuilt[r.bytes].push_back(r.seq);
  return rebuilt == by_bytes_;
}

}  // namespace figrelabel

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "figrelabel/emit.hpp"
#include "figrelabel/vm.hpp"

namespace figrelabel::test {

std::string fixture_path(std::string_view name);
std::string read_file(const std::string &path);
std::string read_fixture(std::string_view name);

// Fixtures that have a matching .spec next to them.
const std::vector<std::string> &spec_fixtures();

// Prologue text from the original macro package, byte for byte. The setup
// block defines MTGdict with Mshow and findlabel; the takeover block opens
// a relabel box and redirects the show family into Mshow.
extern const std::string_view kSetupPrologue;
extern const std::string_view kTakeover;
// The takeover block without its `/save {false} def /restore {pop} def`,
// for comparison against an interpreter running real save/restore.
std::string takeover_without_save_neutering();

struct Triple {
  std::string bytes;
  double x = 0;
  double y = 0;
};

std::vector<Triple> triples(const LabelTable &table);

// Runs the prologue and then `body` with interception switched off, and
// reads the triples Mshow appended to MTGdict's rllist.
std::vector<Triple> prologue_triples(std::string_view body, SaveRestoreMode mode);

// Native extraction of `body` under the same save/restore mode.
std::vector<Triple> native_triples(std::string_view body, SaveRestoreMode mode);

// Bitwise equality of bytes and coordinates. Empty string when equal.
std::string compare_triples(const std::vector<Triple> &expected,
                            const std::vector<Triple> &actual);

struct FindlabelProbe {
  Matrix before;
  Matrix after;
  Matrix expected;  // native find_label plus idtransform/translate
};

// Runs `body` under the prologue, then calls findlabel directly on rllist
// with `user` as the TeX-side reference point.
FindlabelProbe probe_findlabel(std::string_view body, std::string_view sought,
                               Point user);

bool same_bits(double a, double b);
bool same_bits(const Matrix &a, const Matrix &b);

// Re-extracts labels from the rewritten figure and checks them against the
// plan. Returns a description of every mismatch, empty on success.
std::vector<std::string> check_self_consistency(std::string_view eps,
                                                std::string_view spec_text,
                                                bool keep_unmatched);

}  // namespace figrelabel::test

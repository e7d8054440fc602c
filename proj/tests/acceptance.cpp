// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "figrelabel/cli.hpp"
#include "oracle.hpp"

using namespace figrelabel;
using namespace figrelabel::test;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string &why) {
    if (pass) detail = why;
    pass = false;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---------------------------------------------------------------- 1

Outcome example_doc() {
  Outcome out;
  auto t0 = Clock::now();

  struct Want {
    std::string label;
    double x, y;
  };
  // Coordinates the fixture moves to before each show-family call.
  const std::vector<Want> want = {
      {"Ab", 60, 150}, {"P", 144, 160}, {"Bc", 200, 100},
      {"IP\"", 30, 60}, {"P'", 220, 140}};

  CliOptions opts;
  opts.command = Command::check;
  opts.input = fixture_path("example_doc.eps");
  opts.spec_path = fixture_path("example_doc.spec");
  std::ostringstream so, se;
  int code = run_check(opts, so, se);
  if (code != kExitOk) out.fail("check exited " + std::to_string(code) + ": " + se.str());

  std::istringstream lines(so.str());
  std::string line;
  std::size_t found = 0;
  while (std::getline(lines, line)) {
    std::istringstream f(line);
    std::string status, label, xs, ys;
    std::getline(f, status, '\t');
    std::getline(f, label, '\t');
    std::getline(f, xs, '\t');
    std::getline(f, ys, '\t');
    if (status != "FOUND") {
      out.fail("unexpected check line: " + line);
      continue;
    }
    bool matched = false;
    for (const auto &w : want) {
      if (w.label != label) continue;
      matched = true;
      if (std::abs(std::stod(xs) - w.x) > 1e-6 || std::abs(std::stod(ys) - w.y) > 1e-6)
        out.fail("anchor of " + label + " is " + xs + "," + ys);
    }
    if (!matched) out.fail("unknown label " + label);
    ++found;
  }
  if (found != 5) out.fail(std::to_string(found) + "/5 FOUND");
  if (se.str().find("5/5 labels found") == std::string::npos)
    out.fail("summary missing: " + se.str());

  // The spec carries the example's offsets and extra labels.
  RelabelSpec spec = parse_spec(read_fixture("example_doc.spec"));
  const double pt = 72.0 / 72.27;
  const double want_dx[] = {0, -4 * pt, 0, 1 * pt, 1 * pt};
  const double want_dy[] = {1 * pt, 0, 0, 0, 0};
  std::size_t r = 0, e = 0;
  for (const auto &d : spec.directives) {
    if (const auto *rl = std::get_if<Relabel>(&d)) {
      if (r < 5 && (std::abs(rl->dx.bp() - want_dx[r]) > 1e-12 ||
                    std::abs(rl->dy.bp() - want_dy[r]) > 1e-12))
        out.fail("offset of directive " + std::to_string(r));
      ++r;
    } else {
      const auto &x = std::get<ExtraLabel>(d);
      if (e == 0 && (x.x.bp() != -21.6 || x.y.bp() != 21.6)) out.fail("first extralabel");
      if (e == 1 && (std::abs(x.x.bp() + 42.519685) > 1e-5 ||
                     std::abs(x.y.bp() - 42.519685) > 1e-5))
        out.fail("second extralabel");
      ++e;
    }
  }
  if (r != 5 || e != 2) out.fail("spec has wrong directive counts");

  auto dir = std::filesystem::temp_directory_path() / "figrelabel-acceptance";
  std::filesystem::create_directories(dir);
  opts.command = Command::apply;
  opts.output = (dir / "example_doc.out.eps").string();
  std::ostringstream ao, ae;
  code = run_apply(opts, ao, ae);
  if (code != kExitOk) out.fail("apply exited " + std::to_string(code) + ": " + ae.str());

  double elapsed = seconds_since(t0);
  if (elapsed >= 1.0) out.fail("took " + std::to_string(elapsed) + " s");

  if (out.pass) {
    auto problems = check_self_consistency(read_fixture("example_doc.eps"),
                                           read_fixture("example_doc.spec"), false);
    if (!problems.empty()) out.fail(problems.front());
  }
  if (out.pass) out.detail = "5/5 FOUND, apply ok, " + std::to_string(elapsed) + " s";
  return out;
}

// ---------------------------------------------------------------- 2

Outcome prologue_oracle() {
  Outcome out;
  std::size_t compared = 0;
  bool saw_duplicate = false;
  for (const auto &name : spec_fixtures()) {
    std::string body = read_fixture(name + ".eps");
    auto native = native_triples(body, SaveRestoreMode::Neutered);
    auto oracle = prologue_triples(body, SaveRestoreMode::Neutered);
    std::string diff = compare_triples(oracle, native);
    if (!diff.empty()) out.fail(name + ": " + diff);
    ++compared;
    for (std::size_t i = 0; i < native.size(); ++i)
      for (std::size_t j = i + 1; j < native.size(); ++j)
        saw_duplicate = saw_duplicate || native[i].bytes == native[j].bytes;
  }
  if (compared < 10) out.fail("only " + std::to_string(compared) + " fixtures");
  if (!saw_duplicate) out.fail("no fixture shows a label twice");

  struct Probe {
    std::string fixture;
    std::string sought;
    Point user;
  };
  const std::vector<Probe> probes = {
      {"duplicates", "P", {3, 4}},        // three P's, the first must win
      {"no_labels", "Zz", {100, 200}},    // empty list: the `dup 0 eq {pop}` branch
      {"two_labels", "Zz", {-7.5, 12}},   // non-empty list, no match
      {"transformed", "skew", {1, 2}},
  };
  for (const auto &p : probes) {
    std::string body = read_fixture(p.fixture + ".eps");
    if (p.fixture == "no_labels" &&
        !native_triples(body, SaveRestoreMode::Neutered).empty())
      out.fail("no_labels fixture is not empty");
    FindlabelProbe r = probe_findlabel(body, p.sought, p.user);
    if (!same_bits(r.after, r.expected))
      out.fail("findlabel probe on " + p.fixture + " (" + p.sought + ") moved the CTM differently");
    bool should_move = p.sought != "Zz";
    if (should_move == same_bits(r.after, r.before))
      out.fail("findlabel probe on " + p.fixture + " (" + p.sought + ") did not behave as a " +
               (should_move ? "hit" : "miss"));
  }
  if (out.pass)
    out.detail = std::to_string(compared) + " fixtures bit-identical, " +
                 std::to_string(probes.size()) + " findlabel probes";
  return out;
}

// ---------------------------------------------------------------- 3

Matrix random_ctm(std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> angle(0, 360), mag(0.5, 4), shift(-500, 500),
      shear(-0.5, 0.5);
  std::bernoulli_distribution flip(0.5);
  std::uniform_int_distribution<int> op(0, 3), count(1, 4);
  Matrix m = Matrix::identity();
  for (int n = count(rng); n > 0; --n) {
    Matrix step;
    switch (op(rng)) {
      case 0: step = Matrix::rotation(angle(rng)); break;
      case 1:
        step = Matrix::scaling(mag(rng) * (flip(rng) ? -1 : 1), mag(rng) * (flip(rng) ? -1 : 1));
        break;
      case 2: step = Matrix::translation(shift(rng), shift(rng)); break;
      default: step = Matrix{1, shear(rng), shear(rng), 1, 0, 0}; break;
    }
    m = concat_matrix(m, step);
  }
  return m;
}

std::string ps_number(double v) { return format_ps_number(v); }

std::string setmatrix_source(const Matrix &m) {
  return "[" + ps_number(m.a) + " " + ps_number(m.b) + " " + ps_number(m.c) + " " +
         ps_number(m.d) + " " + ps_number(m.tx) + " " + ps_number(m.ty) + "] setmatrix\n";
}

Outcome matrix_suite() {
  Outcome out;
  std::mt19937_64 rng(20261015);
  std::uniform_real_distribution<double> coord(-500, 500), angle(-720, 720);
  double worst_roundtrip = 0, worst_rotation = 0;
  const char *ops[] = {"3 4 translate", "2 0.5 scale", "33 rotate",
                       "[1 0.25 0 1 0 0] concat", "7 7 moveto", "1 1 rmoveto",
                       "newpath 2 2 moveto", "10 0 rlineto"};
  std::uniform_int_distribution<int> pick(0, 7), how_many(0, 6);

  for (int trial = 0; trial < 1000; ++trial) {
    Matrix m = random_ctm(rng);
    if (!m.invertible()) {
      out.fail("generator produced a singular matrix");
      continue;
    }
    Point p{coord(rng), coord(rng)};
    Point back = itransform_point(m, transform_point(m, p));
    worst_roundtrip = std::max({worst_roundtrip, std::abs(back.x - p.x), std::abs(back.y - p.y)});

    Matrix moved = m;
    moved.tx = coord(rng);
    moved.ty = coord(rng);
    Point d{coord(rng), coord(rng)};
    Point r1 = idtransform_delta(m, d), r2 = idtransform_delta(moved, d);
    if (!same_bits(r1.x, r2.x) || !same_bits(r1.y, r2.y))
      out.fail("idtransform depends on translation");

    double theta = angle(rng);
    Matrix rr = concat_matrix(concat_matrix(m, Matrix::rotation(theta)), Matrix::rotation(-theta));
    worst_rotation = std::max({worst_rotation, std::abs(rr.a - m.a), std::abs(rr.b - m.b),
                               std::abs(rr.c - m.c), std::abs(rr.d - m.d),
                               std::abs(rr.tx - m.tx), std::abs(rr.ty - m.ty)});
    Matrix id = concat_matrix(Matrix::rotation(theta), Matrix::rotation(-theta));
    worst_rotation = std::max({worst_rotation, std::abs(id.a - 1), std::abs(id.b),
                               std::abs(id.c), std::abs(id.d - 1), std::abs(id.tx),
                               std::abs(id.ty)});

    Vm vm;
    vm.run_source(setmatrix_source(m) + ps_number(p.x) + " " + ps_number(p.y) + " moveto");
    GraphicsState before = vm.graphics_state();
    std::string inner = "gsave";
    for (int n = how_many(rng); n > 0; --n) inner += std::string(" ") + ops[pick(rng)];
    vm.run_source(inner + " grestore");
    if (!(vm.graphics_state() == before)) out.fail("grestore did not restore the state exactly");
  }
  if (worst_roundtrip > 1e-9)
    out.fail("transform/itransform error " + ps_number(worst_roundtrip));
  if (worst_rotation > 1e-9) out.fail("rotate(t) rotate(-t) error " + ps_number(worst_rotation));
  if (out.pass)
    out.detail = "1000 CTMs, worst round trip " + ps_number(worst_roundtrip) +
                 ", worst rotation " + ps_number(worst_rotation);
  return out;
}

// ---------------------------------------------------------------- 4

Outcome self_consistency() {
  Outcome out;
  std::size_t pairs = 0;
  for (const auto &name : spec_fixtures()) {
    std::string eps = read_fixture(name + ".eps");
    std::string spec = read_fixture(name + ".spec");
    for (bool keep : {false, true}) {
      for (const auto &p : check_self_consistency(eps, spec, keep))
        out.fail(name + (keep ? " (keep): " : ": ") + p);
      ++pairs;
    }
  }
  if (out.pass) out.detail = std::to_string(pairs) + " fixture/spec/mode runs";
  return out;
}

// ---------------------------------------------------------------- 5

Outcome unit_conversions() {
  Outcome out;
  double in = convert_length("1in").bp();
  double pt = convert_length("72.27pt").bp();
  double cm = convert_length("1cm").bp();
  double tr = convert_length("-.3truein").bp();
  if (in != 72.0) out.fail("1in = " + ps_number(in));
  if (std::abs(pt - 72.0) > 1e-9) out.fail("72.27pt = " + ps_number(pt));
  if (std::abs(cm - 28.346457) > 1e-5) out.fail("1cm = " + ps_number(cm));
  if (tr != -21.6) out.fail("-.3truein = " + ps_number(tr));
  if (out.pass)
    out.detail = "1in=" + ps_number(in) + " 72.27pt=" + ps_number(pt) + " 1cm=" +
                 ps_number(cm) + " -.3truein=" + ps_number(tr);
  return out;
}

// ---------------------------------------------------------------- 6

Outcome robustness() {
  Outcome out;
  auto t0 = Clock::now();
  try {
    execute(tokenize("{} loop"));
    out.fail("{} loop returned");
  } catch (const VmError &e) {
    if (e.kind() != VmErrorKind::StepBudgetExceeded)
      out.fail(std::string("{} loop raised ") + vm_error_kind_name(e.kind()));
  }
  double loop_time = seconds_since(t0);
  if (loop_time >= 5.0) out.fail("{} loop took " + std::to_string(loop_time) + " s");

  try {
    execute(tokenize(read_fixture("errors/image.eps")));
    out.fail("image did not abort");
  } catch (const VmError &e) {
    if (e.kind() != VmErrorKind::UnsupportedOperator)
      out.fail(std::string("image raised ") + vm_error_kind_name(e.kind()));
  }

  std::string all;
  for (int b = 0; b < 256; ++b) {
    std::string one(1, static_cast<char>(b));
    all += one;
    std::string src = "(" + escape_ps_string(one) + ")";
    auto toks = tokenize(src);
    if (toks.size() != 1 || toks[0].decoded != one)
      out.fail("byte " + std::to_string(b) + " does not round-trip");
  }
  std::string src = "(" + escape_ps_string(all) + ")";
  auto toks = tokenize(src);
  if (toks.size() != 1 || toks[0].decoded != all) out.fail("256-byte string does not round-trip");

  if (out.pass)
    out.detail = "{} loop stopped after " + std::to_string(loop_time) + " s";
  return out;
}

// ---------------------------------------------------------------- 7

Outcome save_restore_differential() {
  Outcome out;
  std::string body = read_fixture("save_restore.eps");
  auto faithful = native_triples(body, SaveRestoreMode::Faithful);
  auto neutered = native_triples(body, SaveRestoreMode::Neutered);
  auto anchor_of = [](const std::vector<Triple> &ts, const std::string &label) {
    for (const auto &t : ts)
      if (t.bytes == label) return Point{t.x, t.y};
    return Point{NAN, NAN};
  };
  Point lf = anchor_of(faithful, "L"), ln = anchor_of(neutered, "L");
  if (!(lf == Point{10, 10})) out.fail("Faithful L at " + ps_number(lf.x) + "," + ps_number(lf.y));
  if (!(ln == Point{20, 20})) out.fail("Neutered L at " + ps_number(ln.x) + "," + ps_number(ln.y));
  for (auto mode : {SaveRestoreMode::Faithful, SaveRestoreMode::Neutered}) {
    std::string diff = compare_triples(prologue_triples(body, mode), native_triples(body, mode));
    if (!diff.empty())
      out.fail(std::string(mode == SaveRestoreMode::Faithful ? "Faithful" : "Neutered") +
               " oracle: " + diff);
  }
  if (out.pass) out.detail = "Faithful L=(10,10), Neutered L=(20,20), both match the prologue";
  return out;
}

}  // namespace

int main() {
  struct Criterion {
    const char *name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"example document reproduction", example_doc},
      {"verbatim prologue equivalence", prologue_oracle},
      {"randomized matrix suite", matrix_suite},
      {"apply self-consistency", self_consistency},
      {"unit conversions", unit_conversions},
      {"robustness", robustness},
      {"save/restore differential", save_restore_differential},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].run();
    } catch (const std::exception &e) {
      o.fail(std::string("exception: ") + e.what());
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << k + 1 << "] " << criteria[k].name;
    if (!o.detail.empty()) std::cout << ": " << o.detail;
    std::cout << "\n";
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}

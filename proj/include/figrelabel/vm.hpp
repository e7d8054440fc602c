#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "figrelabel/geometry.hpp"
#include "figrelabel/label_table.hpp"
#include "figrelabel/syntax.hpp"

namespace figrelabel {

struct PsObject;
struct DictEntry;
using ObjectList = std::vector<PsObject>;
using DictStorage = std::map<std::string, DictEntry>;

struct PsNull {
  bool operator==(const PsNull &) const = default;
};
struct PsMark {
  bool operator==(const PsMark &) const = default;
};
struct PsName {
  std::string bytes;
  bool literal = true;
};
struct PsString {
  std::shared_ptr<std::string> bytes;
};
struct PsArray {
  std::shared_ptr<ObjectList> items;
};
struct PsProcedure {
  std::shared_ptr<ObjectList> body;
};
struct PsDict {
  std::shared_ptr<DictStorage> entries;
};
struct PsSaveToken {
  std::uint64_t id = 0;
};
/// A built-in operator; `index` points into the interpreter's operator table.
struct PsOperator {
  std::uint16_t index = 0;
};

/// A value on the operand stack. Arrays, procedures, strings and
/// dictionaries are references: copies share the same storage, so a `put`
/// through one copy is visible through every other.
struct PsObject {
  using Value = std::variant<PsNull, double, bool, PsMark, PsName, PsString,
                             PsArray, PsProcedure, PsDict, PsSaveToken,
                             PsOperator>;
  Value value;
  SourcePos pos{0, 0};  // line 0: not from source

  static PsObject null() { return {PsNull{}}; }
  static PsObject number(double v) {
    return {Value{std::in_place_type<double>, v}};
  }
  static PsObject boolean(bool v) {
    return {Value{std::in_place_type<bool>, v}};
  }
  static PsObject mark() { return {PsMark{}}; }
  static PsObject literal_name(std::string bytes) {
    return {PsName{std::move(bytes), true}};
  }
  static PsObject executable_name(std::string bytes) {
    return {PsName{std::move(bytes), false}};
  }
  static PsObject string(std::string bytes) {
    return {PsString{std::make_shared<std::string>(std::move(bytes))}};
  }
  static PsObject array(ObjectList items) {
    return {PsArray{std::make_shared<ObjectList>(std::move(items))}};
  }
  static PsObject procedure(ObjectList body) {
    return {PsProcedure{std::make_shared<ObjectList>(std::move(body))}};
  }
  static PsObject dict();

  template <class T>
  bool is() const { return std::holds_alternative<T>(value); }
  template <class T>
  const T &as() const { return std::get<T>(value); }

  const char *type_name() const;
};

struct DictEntry {
  PsObject key;
  PsObject value;
};

inline PsObject PsObject::dict() {
  return {PsDict{std::make_shared<DictStorage>()}};
}

/// Where the pen is. Stored in device space, as a real interpreter does, so
/// that later CTM changes do not move it. `user` caches the user-space
/// coordinates that produced it while the CTM is still `basis`.
struct CurrentPoint {
  Point device;
  Point user;
  Matrix basis;

  /// Coordinates as `currentpoint` reports them under `ctm`.
  Point user_point(const Matrix &ctm) const;

  bool operator==(const CurrentPoint &) const = default;
};

struct GraphicsState {
  Matrix ctm;
  std::optional<CurrentPoint> current_point;
  std::optional<CurrentPoint> subpath_start;
  int clip_depth = 0;  // gsave nesting, for balance diagnostics

  bool operator==(const GraphicsState &) const = default;
};

enum class SaveRestoreMode {
  Neutered,  // save pushes false, restore pops one operand
  Faithful,  // save/restore snapshot and roll back the graphics state
};

enum class UnknownOperatorMode { Error, PermissiveNoop };

inline constexpr std::uint64_t kDefaultMaxSteps = 10'000'000;

struct VmConfig {
  SaveRestoreMode save_restore_mode = SaveRestoreMode::Faithful;
  UnknownOperatorMode unknown_operator_mode = UnknownOperatorMode::Error;
  std::uint64_t max_steps = kDefaultMaxSteps;
  // When false the show family behaves like a plain interpreter without
  // fonts: operands are consumed and nothing is recorded.
  bool intercept_shows = true;
};

enum class VmErrorKind {
  StackUnderflow,
  TypeMismatch,
  UndefinedName,
  RangeCheck,
  SingularMatrix,
  NoCurrentPoint,
  UnsupportedOperator,
  StepBudgetExceeded,
  SyntaxError,
};

const char *vm_error_kind_name(VmErrorKind kind);

class VmError : public std::runtime_error {
 public:
  VmError(VmErrorKind kind, SourcePos pos, const std::string &detail);

  VmErrorKind kind() const { return kind_; }
  const SourcePos &pos() const { return pos_; }

 private:
  VmErrorKind kind_;
  SourcePos pos_;
};

struct Warning {
  SourcePos pos;
  std::string message;
};

struct ExtractionResult {
  LabelTable labels;
  std::vector<Warning> warnings;
  std::uint64_t steps_used = 0;
};

/// Appends a label for `bytes` at the current point mapped through the CTM.
/// The graphics state is not touched.
std::size_t record_show(const GraphicsState &state, LabelTable &table,
                        std::string_view bytes);

/// Converts tokens into executable objects, assembling `{ }` procedures.
ObjectList build_program(std::span<const Token> tokens);

/// Restricted PostScript interpreter. Single-threaded; one instance per run.
class Vm {
 public:
  explicit Vm(VmConfig config = {});
  ~Vm();
  Vm(const Vm &) = delete;
  Vm &operator=(const Vm &) = delete;

  void run(std::span<const Token> program);
  void run(const ObjectList &program);
  /// Tokenizes and runs. Lexer failures propagate as SyntaxError.
  void run_source(std::string_view source);

  const ObjectList &operand_stack() const;
  const GraphicsState &graphics_state() const;
  const LabelTable &labels() const;
  const std::vector<Warning> &warnings() const;
  std::uint64_t steps_used() const;

  /// Looks `name` up through the dictionary stack.
  std::optional<PsObject> lookup(std::string_view name) const;

  ExtractionResult result() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

ExtractionResult execute(std::span<const Token> program,
                         const VmConfig &config = {});

std::string_view operator_name(PsOperator op);

/// Builtins that always abort: they read inline data we cannot skip.
bool is_unsupported_operator(std::string_view name);

}  // namespace figrelabel

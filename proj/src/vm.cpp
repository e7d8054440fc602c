#include "figrelabel/vm.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <set>
#include <unordered_map>

namespace figrelabel {

// Operator table. Painting and appearance operators consume their operands
// and draw nothing; the show family is intercepted.
#define FIGRELABEL_OPERATORS(X)                                              \
  /* operand stack */                                                        \
  X(pop, "pop") X(exch, "exch") X(dup, "dup") X(copy, "copy")                \
  X(index, "index") X(roll, "roll") X(clear, "clear") X(count, "count")      \
  X(mark, "mark") X(cleartomark, "cleartomark")                              \
  X(counttomark, "counttomark")                                              \
  /* arithmetic */                                                           \
  X(add, "add") X(sub, "sub") X(mul, "mul") X(div, "div") X(idiv, "idiv")    \
  X(mod, "mod") X(neg, "neg") X(abs, "abs") X(round, "round")                \
  X(truncate, "truncate") X(floor, "floor") X(ceiling, "ceiling")            \
  X(sqrt, "sqrt") X(atan, "atan") X(sin, "sin") X(cos, "cos")                \
  X(exp, "exp") X(ln, "ln") X(log, "log") X(cvi, "cvi") X(cvr, "cvr")        \
  /* relational and logical */                                               \
  X(eq, "eq") X(ne, "ne") X(gt, "gt") X(ge, "ge") X(lt, "lt") X(le, "le")    \
  X(and_, "and") X(or_, "or") X(not_, "not") X(xor_, "xor")                  \
  X(bitshift, "bitshift") X(true_, "true") X(false_, "false")                \
  X(null, "null")                                                            \
  /* control */                                                              \
  X(exec, "exec") X(if_, "if") X(ifelse, "ifelse") X(for_, "for")            \
  X(repeat, "repeat") X(loop, "loop") X(exit, "exit") X(forall, "forall")    \
  X(quit, "quit") X(stop, "stop")                                            \
  /* composites */                                                           \
  X(array, "array") X(mark_open, "[") X(mark_close, "]") X(aload, "aload")   \
  X(astore, "astore") X(length, "length") X(get, "get") X(put, "put")        \
  X(getinterval, "getinterval") X(putinterval, "putinterval")                \
  X(string, "string") X(cvx, "cvx") X(cvlit, "cvlit") X(xcheck, "xcheck")    \
  X(cvn, "cvn") X(readonly, "readonly") X(executeonly, "executeonly")        \
  X(noaccess, "noaccess") X(bind, "bind")                                    \
  /* dictionaries */                                                         \
  X(dict, "dict") X(def, "def") X(load, "load") X(begin, "begin")            \
  X(end, "end") X(store, "store") X(known, "known") X(where, "where")        \
  X(currentdict, "currentdict") X(userdict, "userdict")                      \
  X(systemdict, "systemdict") X(countdictstack, "countdictstack")            \
  /* graphics state and CTM */                                               \
  X(gsave, "gsave") X(grestore, "grestore") X(save, "save")                  \
  X(restore, "restore") X(translate, "translate") X(scale, "scale")          \
  X(rotate, "rotate") X(concat, "concat") X(matrix, "matrix")                \
  X(identmatrix, "identmatrix") X(currentmatrix, "currentmatrix")            \
  X(setmatrix, "setmatrix") X(defaultmatrix, "defaultmatrix")                \
  X(initmatrix, "initmatrix") X(invertmatrix, "invertmatrix")                \
  X(concatmatrix, "concatmatrix") X(transform, "transform")                  \
  X(itransform, "itransform") X(dtransform, "dtransform")                    \
  X(idtransform, "idtransform")                                              \
  /* path construction */                                                    \
  X(moveto, "moveto") X(rmoveto, "rmoveto") X(lineto, "lineto")              \
  X(rlineto, "rlineto") X(curveto, "curveto") X(rcurveto, "rcurveto")        \
  X(closepath, "closepath") X(newpath, "newpath")                            \
  X(currentpoint, "currentpoint") X(arc, "arc") X(arcn, "arcn")              \
  /* painting and appearance */                                              \
  X(stroke, "stroke") X(fill, "fill") X(eofill, "eofill") X(clip, "clip")    \
  X(eoclip, "eoclip") X(initclip, "initclip")                                \
  X(setlinewidth, "setlinewidth") X(setlinecap, "setlinecap")                \
  X(setlinejoin, "setlinejoin") X(setmiterlimit, "setmiterlimit")            \
  X(setdash, "setdash") X(setgray, "setgray") X(setrgbcolor, "setrgbcolor")  \
  X(sethsbcolor, "sethsbcolor") X(setcmykcolor, "setcmykcolor")              \
  X(setflat, "setflat") X(showpage, "showpage")                              \
  /* fonts */                                                                \
  X(findfont, "findfont") X(scalefont, "scalefont") X(makefont, "makefont")  \
  X(setfont, "setfont") X(definefont, "definefont")                          \
  X(currentfont, "currentfont") X(selectfont, "selectfont")                  \
  X(stringwidth, "stringwidth")                                              \
  /* show family */                                                          \
  X(show, "show") X(ashow, "ashow") X(widthshow, "widthshow")                \
  X(awidthshow, "awidthshow") X(xshow, "xshow") X(yshow, "yshow")            \
  X(xyshow, "xyshow") X(cshow, "cshow") X(kshow, "kshow")                    \
  /* always fatal */                                                         \
  X(image, "image") X(colorimage, "colorimage") X(imagemask, "imagemask")    \
  X(readhexstring, "readhexstring") X(currentfile, "currentfile")            \
  X(stopped, "stopped") X(run, "run")

namespace {

enum class Op : std::uint16_t {
#define FIGRELABEL_ENUM(id, name) id,
  FIGRELABEL_OPERATORS(FIGRELABEL_ENUM)
#undef FIGRELABEL_ENUM
      count_
};

constexpr std::array<std::string_view, static_cast<std::size_t>(Op::count_)>
    kOpNames = {
#define FIGRELABEL_NAME(id, name) std::string_view(name),
        FIGRELABEL_OPERATORS(FIGRELABEL_NAME)
#undef FIGRELABEL_NAME
};

constexpr double kIntegralTolerance = 1e-9;
constexpr int kMaxExecDepth = 1500;

struct ExitSignal {};
struct HaltSignal {};

std::string number_key(double v) {
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return "\x01" + std::string(buf, p);
}

bool same_bytes(const PsObject &a, const PsObject &b) {
  auto bytes = [](const PsObject &o) -> const std::string * {
    if (o.is<PsString>()) return o.as<PsString>().bytes.get();
    if (o.is<PsName>()) return &o.as<PsName>().bytes;
    return nullptr;
  };
  const std::string *x = bytes(a);
  const std::string *y = bytes(b);
  return x && y && *x == *y;
}

bool objects_equal(const PsObject &a, const PsObject &b) {
  if (a.is<double>() && b.is<double>()) return a.as<double>() == b.as<double>();
  if ((a.is<PsString>() || a.is<PsName>()) &&
      (b.is<PsString>() || b.is<PsName>()))
    return same_bytes(a, b);
  if (a.value.index() != b.value.index()) return false;
  return std::visit(
      [&](const auto &x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const T &y = std::get<T>(b.value);
        if constexpr (std::is_same_v<T, bool>) return x == y;
        else if constexpr (std::is_same_v<T, PsNull> || std::is_same_v<T, PsMark>)
          return true;
        else if constexpr (std::is_same_v<T, PsArray>) return x.items == y.items;
        else if constexpr (std::is_same_v<T, PsProcedure>) return x.body == y.body;
        else if constexpr (std::is_same_v<T, PsDict>) return x.entries == y.entries;
        else if constexpr (std::is_same_v<T, PsSaveToken>) return x.id == y.id;
        else if constexpr (std::is_same_v<T, PsOperator>) return x.index == y.index;
        else return false;
      },
      a.value);
}

std::string describe_vm(VmErrorKind kind, SourcePos pos,
                        const std::string &detail) {
  std::string msg = vm_error_kind_name(kind);
  if (pos.line > 0)
    msg += " at line " + std::to_string(pos.line) + ", byte offset " +
           std::to_string(pos.offset);
  if (!detail.empty()) msg += ": " + detail;
  return msg;
}

const std::set<std::string_view> kUnsupported = {
    "image", "colorimage", "imagemask", "readhexstring",
    "currentfile", "stopped", "run"};

}  // namespace

const char *PsObject::type_name() const {
  return std::visit(
      [](const auto &x) -> const char * {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, PsNull>) return "null";
        else if constexpr (std::is_same_v<T, double>) return "number";
        else if constexpr (std::is_same_v<T, bool>) return "boolean";
        else if constexpr (std::is_same_v<T, PsMark>) return "mark";
        else if constexpr (std::is_same_v<T, PsName>) return "name";
        else if constexpr (std::is_same_v<T, PsString>) return "string";
        else if constexpr (std::is_same_v<T, PsArray>) return "array";
        else if constexpr (std::is_same_v<T, PsProcedure>) return "procedure";
        else if constexpr (std::is_same_v<T, PsDict>) return "dictionary";
        else if constexpr (std::is_same_v<T, PsSaveToken>) return "save";
        else return "operator";
      },
      value);
}

Point CurrentPoint::user_point(const Matrix &ctm) const {
  if (ctm == basis) return user;
  return itransform_point(ctm, device);
}

const char *vm_error_kind_name(VmErrorKind kind) {
  switch (kind) {
    case VmErrorKind::StackUnderflow: return "StackUnderflow";
    case VmErrorKind::TypeMismatch: return "TypeMismatch";
    case VmErrorKind::UndefinedName: return "UndefinedName";
    case VmErrorKind::RangeCheck: return "RangeCheck";
    case VmErrorKind::SingularMatrix: return "SingularMatrix";
    case VmErrorKind::NoCurrentPoint: return "NoCurrentPoint";
    case VmErrorKind::UnsupportedOperator: return "UnsupportedOperator";
    case VmErrorKind::StepBudgetExceeded: return "StepBudgetExceeded";
    case VmErrorKind::SyntaxError: return "SyntaxError";
  }
  return "?";
}

VmError::VmError(VmErrorKind kind, SourcePos pos, const std::string &detail)
    : std::runtime_error(describe_vm(kind, pos, detail)),
      kind_(kind),
      pos_(pos) {}

std::string_view operator_name(PsOperator op) {
  return op.index < kOpNames.size() ? kOpNames[op.index] : "?";
}

bool is_unsupported_operator(std::string_view name) {
  return kUnsupported.count(name) > 0;
}

std::size_t record_show(const GraphicsState &state, LabelTable &table,
                        std::string_view bytes) {
  if (!state.current_point)
    throw VmError(VmErrorKind::NoCurrentPoint, SourcePos{0, 0},
                  "show without a current point");
  Point user = state.current_point->user_point(state.ctm);
  return table.append(std::string(bytes), transform_point(state.ctm, user));
}

namespace {

std::string name_of(const Token &tok) {
  std::string_view t = tok.text;
  if (tok.kind == TokenKind::LiteralName) return std::string(t.substr(1));
  if (t.substr(0, 2) == "//") return std::string(t.substr(2));
  return std::string(t);
}

ObjectList build_range(std::span<const Token> tokens, std::size_t &i,
                       bool nested, SourcePos open_pos) {
  ObjectList out;
  while (i < tokens.size()) {
    const Token &tok = tokens[i++];
    PsObject obj;
    switch (tok.kind) {
      case TokenKind::DscComment:
        continue;
      case TokenKind::Integer:
      case TokenKind::Real:
      case TokenKind::RadixNumber:
        obj = PsObject::number(tok.number);
        break;
      case TokenKind::String:
      case TokenKind::HexString:
        obj = PsObject::string(*tok.decoded);
        break;
      case TokenKind::LiteralName:
        obj = PsObject::literal_name(name_of(tok));
        break;
      case TokenKind::ExecutableName:
        obj = PsObject::executable_name(name_of(tok));
        break;
      case TokenKind::ArrayOpen:
        obj = PsObject::executable_name("[");
        break;
      case TokenKind::ArrayClose:
        obj = PsObject::executable_name("]");
        break;
      case TokenKind::ProcOpen:
        obj = PsObject::procedure(build_range(tokens, i, true, tok.pos));
        break;
      case TokenKind::ProcClose:
        if (!nested)
          throw VmError(VmErrorKind::SyntaxError, tok.pos, "unmatched '}'");
        return out;
    }
    obj.pos = tok.pos;
    out.push_back(std::move(obj));
  }
  if (nested)
    throw VmError(VmErrorKind::SyntaxError, open_pos, "unterminated '{'");
  return out;
}

}  // namespace

ObjectList build_program(std::span<const Token> tokens) {
  std::size_t i = 0;
  return build_range(tokens, i, false, SourcePos{0, 0});
}

struct Vm::Impl {
  struct SaveRecord {
    std::uint64_t id;
    GraphicsState gs;
    std::vector<GraphicsState> gstack;
  };

  VmConfig config;
  ObjectList ostack;
  std::vector<PsDict> dstack;
  GraphicsState gs;
  std::vector<GraphicsState> gstack;
  std::vector<SaveRecord> saves;
  std::uint64_t next_save_id = 1;
  PsObject font = PsObject::null();
  LabelTable labels;
  std::vector<Warning> warnings;
  std::set<std::string> warned;
  std::uint64_t steps = 0;
  int depth = 0;
  SourcePos pos{0, 0};

  explicit Impl(VmConfig cfg) : config(cfg) {
    if (config.max_steps == 0)
      throw std::invalid_argument("max_steps must be positive");
    PsObject sys = PsObject::dict();
    auto &entries = *sys.as<PsDict>().entries;
    for (std::size_t k = 0; k < kOpNames.size(); ++k) {
      std::string name(kOpNames[k]);
      entries[name] = DictEntry{PsObject::literal_name(name),
                                PsObject{PsOperator{static_cast<std::uint16_t>(k)}}};
    }
    dstack.push_back(sys.as<PsDict>());
    dstack.push_back(PsObject::dict().as<PsDict>());
    font = make_font("Courier");
  }

  // ---------------------------------------------------------------- errors

  [[noreturn]] void fail(VmErrorKind kind, const std::string &detail) const {
    throw VmError(kind, pos, detail);
  }

  void warn(const std::string &key, const std::string &message) {
    if (warned.insert(key).second) warnings.push_back(Warning{pos, message});
  }

  void step() {
    if (++steps > config.max_steps) {
      steps = config.max_steps;
      fail(VmErrorKind::StepBudgetExceeded,
           "exceeded " + std::to_string(config.max_steps) + " steps");
    }
  }

  // --------------------------------------------------------- operand stack

  void need(std::size_t n, std::string_view op) const {
    if (ostack.size() < n)
      fail(VmErrorKind::StackUnderflow,
           std::string(op) + " needs " + std::to_string(n) + " operand(s)");
  }

  void push(PsObject o) { ostack.push_back(std::move(o)); }
  void push_number(double v) { ostack.push_back(PsObject::number(v)); }
  void push_bool(bool v) { ostack.push_back(PsObject::boolean(v)); }

  PsObject pop() {
    need(1, "operator");
    PsObject o = std::move(ostack.back());
    ostack.pop_back();
    return o;
  }

  [[noreturn]] void type_error(const PsObject &o, std::string_view want) const {
    fail(VmErrorKind::TypeMismatch,
         "expected " + std::string(want) + ", got " + o.type_name());
  }

  double to_number(const PsObject &o) const {
    if (!o.is<double>()) type_error(o, "number");
    return o.as<double>();
  }

  long long to_int(const PsObject &o) const {
    double v = to_number(o);
    double r = std::round(v);
    if (!(std::abs(v - r) <= kIntegralTolerance) || std::abs(r) > 9.0e15)
      type_error(o, "integer");
    return static_cast<long long>(r);
  }

  double pop_number() { return to_number(pop()); }
  long long pop_int() { return to_int(pop()); }

  bool pop_bool() {
    PsObject o = pop();
    if (!o.is<bool>()) type_error(o, "boolean");
    return o.as<bool>();
  }

  std::shared_ptr<ObjectList> pop_proc() {
    PsObject o = pop();
    if (!o.is<PsProcedure>()) type_error(o, "procedure");
    return o.as<PsProcedure>().body;
  }

  std::shared_ptr<ObjectList> array_items(const PsObject &o) const {
    if (o.is<PsArray>()) return o.as<PsArray>().items;
    if (o.is<PsProcedure>()) return o.as<PsProcedure>().body;
    type_error(o, "array");
  }

  std::shared_ptr<DictStorage> dict_of(const PsObject &o) const {
    if (!o.is<PsDict>()) type_error(o, "dictionary");
    return o.as<PsDict>().entries;
  }

  std::string pop_string() {
    PsObject o = pop();
    if (!o.is<PsString>()) type_error(o, "string");
    return *o.as<PsString>().bytes;
  }

  // --------------------------------------------------------- dictionaries

  std::string key_of(const PsObject &o) const {
    if (o.is<PsName>()) return o.as<PsName>().bytes;
    if (o.is<PsString>()) return *o.as<PsString>().bytes;
    if (o.is<double>()) return number_key(o.as<double>());
    if (o.is<bool>()) return o.as<bool>() ? "\x02" "true" : "\x02" "false";
    type_error(o, "dictionary key");
  }

  static PsObject stored_key(const PsObject &o) {
    if (o.is<PsString>()) return PsObject::literal_name(*o.as<PsString>().bytes);
    if (o.is<PsName>()) return PsObject::literal_name(o.as<PsName>().bytes);
    PsObject k = o;
    k.pos = SourcePos{0, 0};
    return k;
  }

  const PsObject *find(std::string_view key) const {
    for (auto it = dstack.rbegin(); it != dstack.rend(); ++it) {
      auto &entries = *it->entries;
      auto found = entries.find(std::string(key));
      if (found != entries.end()) return &found->second.value;
    }
    return nullptr;
  }

  DictStorage *where(const std::string &key) {
    for (auto it = dstack.rbegin(); it != dstack.rend(); ++it) {
      if (it->entries->count(key)) return it->entries.get();
    }
    return nullptr;
  }

  PsDict where_dict(const std::string &key) {
    for (auto it = dstack.rbegin(); it != dstack.rend(); ++it) {
      if (it->entries->count(key)) return *it;
    }
    return PsDict{};
  }

  static PsObject make_font(std::string name) {
    PsObject f = PsObject::dict();
    (*f.as<PsDict>().entries)["FontName"] =
        DictEntry{PsObject::literal_name("FontName"),
                  PsObject::literal_name(std::move(name))};
    return f;
  }

  // ------------------------------------------------------------ execution

  void run_items(const std::shared_ptr<ObjectList> &body) {
    for (std::size_t i = 0; i < body->size(); ++i) {
      PsObject obj = (*body)[i];
      step();
      exec_item(obj);
    }
  }

  void exec_item(const PsObject &obj) {
    if (obj.is<PsName>() && !obj.as<PsName>().literal) {
      execute_name(obj);
    } else if (obj.is<PsOperator>()) {
      call(obj.as<PsOperator>());
    } else {
      push(obj);
    }
  }

  void execute_name(const PsObject &name_obj) {
    if (name_obj.pos.line > 0) pos = name_obj.pos;
    const std::string &name = name_obj.as<PsName>().bytes;
    const PsObject *value = find(name);
    if (!value) {
      if (config.unknown_operator_mode == UnknownOperatorMode::Error)
        fail(VmErrorKind::UndefinedName, "'" + name + "' is not defined");
      warn("undefined:" + name, "undefined name '" + name + "' skipped");
      return;
    }
    PsObject v = *value;
    exec_value(v);
  }

  void exec_value(const PsObject &v) {
    if (v.is<PsOperator>()) {
      call(v.as<PsOperator>());
    } else if (v.is<PsProcedure>()) {
      exec_proc(v.as<PsProcedure>().body);
    } else if (v.is<PsName>() && !v.as<PsName>().literal) {
      execute_name(v);
    } else {
      push(v);
    }
  }

  void exec_proc(const std::shared_ptr<ObjectList> &body) {
    if (depth >= kMaxExecDepth)
      fail(VmErrorKind::RangeCheck, "execution stack overflow");
    ++depth;
    try {
      run_items(body);
    } catch (...) {
      --depth;
      throw;
    }
    --depth;
  }

  template <class F>
  void looping(F &&body) {
    try {
      body();
    } catch (const ExitSignal &) {
    }
  }

  void run_top(const ObjectList &program) {
    auto body = std::make_shared<ObjectList>(program);
    try {
      run_items(body);
    } catch (const HaltSignal &) {
    } catch (const ExitSignal &) {
      fail(VmErrorKind::RangeCheck, "exit outside of a loop");
    }
    depth = 0;
  }

  // ---------------------------------------------------------------- matrix

  Matrix to_matrix(const PsObject &o) const {
    auto items = array_items(o);
    if (items->size() != 6)
      fail(VmErrorKind::RangeCheck, "matrix must have 6 elements");
    std::array<double, 6> v{};
    for (std::size_t k = 0; k < 6; ++k) v[k] = to_number((*items)[k]);
    return {v[0], v[1], v[2], v[3], v[4], v[5]};
  }

  void store_matrix(const PsObject &target, const Matrix &m) const {
    auto items = array_items(target);
    if (items->size() != 6)
      fail(VmErrorKind::RangeCheck, "matrix must have 6 elements");
    double v[6] = {m.a, m.b, m.c, m.d, m.tx, m.ty};
    for (std::size_t k = 0; k < 6; ++k) (*items)[k] = PsObject::number(v[k]);
  }

  static PsObject matrix_object(const Matrix &m) {
    return PsObject::array({PsObject::number(m.a), PsObject::number(m.b),
                            PsObject::number(m.c), PsObject::number(m.d),
                            PsObject::number(m.tx), PsObject::number(m.ty)});
  }

  bool top_is_array() const {
    return !ostack.empty() && ostack.back().is<PsArray>();
  }

  // `x y [matrix] op` forms that map a point or delta.
  void point_op(Point (*fn)(const Matrix &, Point)) {
    Matrix m = gs.ctm;
    if (top_is_array()) m = to_matrix(pop());
    double y = pop_number();
    double x = pop_number();
    Point r = fn(m, {x, y});
    push_number(r.x);
    push_number(r.y);
  }

  // `args [matrix] op`: modify the CTM, or fill and return the matrix.
  void ctm_op(std::size_t argc, Matrix (*make)(const double *)) {
    std::optional<PsObject> target;
    if (top_is_array()) target = pop();
    need(argc, "matrix operator");
    double args[2] = {0, 0};
    for (std::size_t k = argc; k-- > 0;) args[k] = pop_number();
    Matrix m = make(args);
    if (target) {
      store_matrix(*target, m);
      push(*target);
    } else {
      gs.ctm = concat_matrix(gs.ctm, m);
    }
  }

  // ------------------------------------------------------------------ path

  void set_point(Point user) {
    gs.current_point = CurrentPoint{transform_point(gs.ctm, user), user, gs.ctm};
  }

  Point require_point(std::string_view op) const {
    if (!gs.current_point)
      fail(VmErrorKind::NoCurrentPoint, std::string(op) + " without a current point");
    return gs.current_point->user_point(gs.ctm);
  }

  Point pop_point() {
    double y = pop_number();
    double x = pop_number();
    return {x, y};
  }

  void arc_op() {
    need(5, "arc");
    double a2 = pop_number();
    double a1 = pop_number();
    double r = pop_number();
    Point c = pop_point();
    double s, co;
    sincos_degrees(a1, s, co);
    Point start{c.x + r * co, c.y + r * s};
    sincos_degrees(a2, s, co);
    Point end{c.x + r * co, c.y + r * s};
    if (!gs.current_point) {
      set_point(start);
      gs.subpath_start = gs.current_point;
    }
    set_point(end);
  }

  // ------------------------------------------------------------ show family

  // Each operator takes `before` operands below the string and `after`
  // operands above it; the string position follows the interception table
  // {Mshow pop pop}, {pop Mshow}, ...
  void show_op(std::string_view op, std::size_t below, std::size_t above) {
    need(below + above + 1, op);
    const PsObject &str = ostack[ostack.size() - 1 - above];
    if (!str.is<PsString>()) type_error(str, "string");
    std::string bytes = *str.as<PsString>().bytes;
    ostack.resize(ostack.size() - (below + above + 1));
    require_point(op);
    if (config.intercept_shows) record_show(gs, labels, bytes);
  }

  // --------------------------------------------------------------- dispatch

  void call(PsOperator op) {
    try {
      dispatch(static_cast<Op>(op.index));
    } catch (const SingularMatrixError &) {
      fail(VmErrorKind::SingularMatrix, "matrix is not invertible");
    }
  }

  void dispatch(Op op);
};

void Vm::Impl::dispatch(Op op) {
  switch (op) {
    // ------------------------------------------------------ operand stack
    case Op::pop:
      pop();
      break;
    case Op::exch: {
      need(2, "exch");
      std::swap(ostack[ostack.size() - 1], ostack[ostack.size() - 2]);
      break;
    }
    case Op::dup:
      need(1, "dup");
      push(ostack.back());
      break;
    case Op::copy: {
      need(1, "copy");
      const PsObject &top = ostack.back();
      if (top.is<double>()) {
        long long n = pop_int();
        if (n < 0) fail(VmErrorKind::RangeCheck, "negative copy count");
        need(static_cast<std::size_t>(n), "copy");
        std::size_t from = ostack.size() - static_cast<std::size_t>(n);
        for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k)
          ostack.push_back(ostack[from + k]);
      } else if (top.is<PsDict>()) {
        need(2, "copy");
        PsObject dst = pop();
        PsObject src = pop();
        for (const auto &[k, e] : *dict_of(src)) (*dict_of(dst))[k] = e;
        push(dst);
      } else if (top.is<PsString>()) {
        need(2, "copy");
        PsObject dst = pop();
        PsObject src = pop();
        if (!src.is<PsString>()) type_error(src, "string");
        auto &d = *dst.as<PsString>().bytes;
        const auto &s = *src.as<PsString>().bytes;
        if (s.size() > d.size()) fail(VmErrorKind::RangeCheck, "copy target too short");
        std::copy(s.begin(), s.end(), d.begin());
        push(PsObject::string(d.substr(0, s.size())));
      } else {
        need(2, "copy");
        PsObject dst = pop();
        PsObject src = pop();
        auto d = array_items(dst);
        auto s = array_items(src);
        if (s->size() > d->size()) fail(VmErrorKind::RangeCheck, "copy target too short");
        std::copy(s->begin(), s->end(), d->begin());
        push(PsObject::array(ObjectList(d->begin(), d->begin() + s->size())));
      }
      break;
    }
    case Op::index: {
      long long n = pop_int();
      if (n < 0) fail(VmErrorKind::RangeCheck, "negative index");
      need(static_cast<std::size_t>(n) + 1, "index");
      push(ostack[ostack.size() - 1 - static_cast<std::size_t>(n)]);
      break;
    }
    case Op::roll: {
      need(2, "roll");
      long long j = pop_int();
      long long n = pop_int();
      if (n < 0) fail(VmErrorKind::RangeCheck, "negative roll count");
      need(static_cast<std::size_t>(n), "roll");
      if (n == 0) break;
      long long shift = ((j % n) + n) % n;
      auto first = ostack.end() - n;
      std::rotate(first, ostack.end() - shift, ostack.end());
      break;
    }
    case Op::clear:
      ostack.clear();
      break;
    case Op::count:
      push_number(static_cast<double>(ostack.size()));
      break;
    case Op::mark:
    case Op::mark_open:
      push(PsObject::mark());
      break;
    case Op::cleartomark:
    case Op::counttomark: {
      auto it = std::find_if(ostack.rbegin(), ostack.rend(),
                             [](const PsObject &o) { return o.is<PsMark>(); });
      if (it == ostack.rend()) fail(VmErrorKind::RangeCheck, "unmatched mark");
      std::size_t above = static_cast<std::size_t>(it - ostack.rbegin());
      if (op == Op::counttomark) {
        push_number(static_cast<double>(above));
      } else {
        ostack.resize(ostack.size() - above - 1);
      }
      break;
    }
    case Op::mark_close: {
      auto it = std::find_if(ostack.rbegin(), ostack.rend(),
                             [](const PsObject &o) { return o.is<PsMark>(); });
      if (it == ostack.rend()) fail(VmErrorKind::RangeCheck, "unmatched mark");
      std::size_t above = static_cast<std::size_t>(it - ostack.rbegin());
      ObjectList items(ostack.end() - above, ostack.end());
      ostack.resize(ostack.size() - above - 1);
      push(PsObject::array(std::move(items)));
      break;
    }

    // --------------------------------------------------------- arithmetic
    case Op::add: case Op::sub: case Op::mul: case Op::div: {
      need(2, kOpNames[static_cast<std::size_t>(op)]);
      double b = pop_number();
      double a = pop_number();
      double r = 0;
      if (op == Op::add) r = a + b;
      else if (op == Op::sub) r = a - b;
      else if (op == Op::mul) r = a * b;
      else {
        if (b == 0) fail(VmErrorKind::RangeCheck, "division by zero");
        r = a / b;
      }
      push_number(r);
      break;
    }
    case Op::idiv: case Op::mod: {
      need(2, kOpNames[static_cast<std::size_t>(op)]);
      long long b = pop_int();
      long long a = pop_int();
      if (b == 0) fail(VmErrorKind::RangeCheck, "division by zero");
      push_number(static_cast<double>(op == Op::idiv ? a / b : a % b));
      break;
    }
    case Op::neg: push_number(-pop_number()); break;
    case Op::abs: push_number(std::abs(pop_number())); break;
    case Op::round: push_number(std::floor(pop_number() + 0.5)); break;
    case Op::truncate: push_number(std::trunc(pop_number())); break;
    case Op::floor: push_number(std::floor(pop_number())); break;
    case Op::ceiling: push_number(std::ceil(pop_number())); break;
    case Op::sqrt: {
      double v = pop_number();
      if (v < 0) fail(VmErrorKind::RangeCheck, "sqrt of negative number");
      push_number(std::sqrt(v));
      break;
    }
    case Op::atan: {
      need(2, "atan");
      double den = pop_number();
      double num = pop_number();
      if (num == 0 && den == 0) fail(VmErrorKind::RangeCheck, "atan 0 0");
      double deg = std::atan2(num, den) * 180.0 / 3.14159265358979323846;
      if (deg < 0) deg += 360.0;
      push_number(deg);
      break;
    }
    case Op::sin: case Op::cos: {
      double s, c;
      sincos_degrees(pop_number(), s, c);
      push_number(op == Op::sin ? s : c);
      break;
    }
    case Op::exp: {
      need(2, "exp");
      double e = pop_number();
      double base = pop_number();
      double r = std::pow(base, e);
      if (!std::isfinite(r)) fail(VmErrorKind::RangeCheck, "exp result undefined");
      push_number(r);
      break;
    }
    case Op::ln: case Op::log: {
      double v = pop_number();
      if (v <= 0) fail(VmErrorKind::RangeCheck, "logarithm of non-positive number");
      push_number(op == Op::ln ? std::log(v) : std::log10(v));
      break;
    }
    case Op::cvi: case Op::cvr: {
      PsObject o = pop();
      double v = 0;
      if (o.is<PsString>()) {
        auto toks = tokenize(*o.as<PsString>().bytes);
        if (toks.size() != 1 || !toks[0].is_number()) type_error(o, "numeric string");
        v = toks[0].number;
      } else {
        v = to_number(o);
      }
      push_number(op == Op::cvi ? std::trunc(v) : v);
      break;
    }

    // --------------------------------------------------- relational/logic
    case Op::eq: case Op::ne: {
      need(2, kOpNames[static_cast<std::size_t>(op)]);
      PsObject b = pop();
      PsObject a = pop();
      bool e = objects_equal(a, b);
      push_bool(op == Op::eq ? e : !e);
      break;
    }
    case Op::gt: case Op::ge: case Op::lt: case Op::le: {
      need(2, kOpNames[static_cast<std::size_t>(op)]);
      PsObject b = pop();
      PsObject a = pop();
      int cmp = 0;
      if (a.is<double>() && b.is<double>()) {
        double x = a.as<double>(), y = b.as<double>();
        cmp = x < y ? -1 : (x > y ? 1 : 0);
      } else if (a.is<PsString>() && b.is<PsString>()) {
        cmp = a.as<PsString>().bytes->compare(*b.as<PsString>().bytes);
        cmp = cmp < 0 ? -1 : (cmp > 0 ? 1 : 0);
      } else {
        type_error(a.is<double>() || a.is<PsString>() ? b : a, "number or string");
      }
      bool r = op == Op::gt ? cmp > 0
             : op == Op::ge ? cmp >= 0
             : op == Op::lt ? cmp < 0
                            : cmp <= 0;
      push_bool(r);
      break;
    }
    case Op::and_: case Op::or_: case Op::xor_: {
      need(2, kOpNames[static_cast<std::size_t>(op)]);
      if (ostack.back().is<bool>()) {
        bool b = pop_bool();
        bool a = pop_bool();
        push_bool(op == Op::and_ ? (a && b) : op == Op::or_ ? (a || b) : (a != b));
      } else {
        long long b = pop_int();
        long long a = pop_int();
        push_number(static_cast<double>(op == Op::and_ ? (a & b)
                                        : op == Op::or_ ? (a | b)
                                                        : (a ^ b)));
      }
      break;
    }
    case Op::not_: {
      need(1, "not");
      if (ostack.back().is<bool>()) push_bool(!pop_bool());
      else push_number(static_cast<double>(~pop_int()));
      break;
    }
    case Op::bitshift: {
      need(2, "bitshift");
      long long shift = pop_int();
      long long v = pop_int();
      auto u = static_cast<std::uint32_t>(v);
      std::uint32_t r = 0;
      if (shift >= 32 || shift <= -32) r = 0;
      else if (shift >= 0) r = u << shift;
      else r = u >> (-shift);
      push_number(static_cast<double>(static_cast<std::int32_t>(r)));
      break;
    }
    case Op::true_: push_bool(true); break;
    case Op::false_: push_bool(false); break;
    case Op::null: push(PsObject::null()); break;

    // ------------------------------------------------------------ control
    case Op::exec: {
      PsObject o = pop();
      exec_value(o);
      break;
    }
    case Op::if_: {
      need(2, "if");
      auto proc = pop_proc();
      if (pop_bool()) exec_proc(proc);
      break;
    }
    case Op::ifelse: {
      need(3, "ifelse");
      auto no = pop_proc();
      auto yes = pop_proc();
      exec_proc(pop_bool() ? yes : no);
      break;
    }
    case Op::for_: {
      need(4, "for");
      auto proc = pop_proc();
      double limit = pop_number();
      double inc = pop_number();
      double v = pop_number();
      looping([&] {
        while (inc > 0 ? v <= limit : inc < 0 ? v >= limit : v <= limit) {
          step();
          push_number(v);
          exec_proc(proc);
          v += inc;
        }
      });
      break;
    }
    case Op::repeat: {
      need(2, "repeat");
      auto proc = pop_proc();
      long long n = pop_int();
      if (n < 0) fail(VmErrorKind::RangeCheck, "negative repeat count");
      looping([&] {
        for (long long k = 0; k < n; ++k) {
          step();
          exec_proc(proc);
        }
      });
      break;
    }
    case Op::loop: {
      auto proc = pop_proc();
      looping([&] {
        while (true) {
          step();
          exec_proc(proc);
        }
      });
      break;
    }
    case Op::exit:
      throw ExitSignal{};
    case Op::forall: {
      need(2, "forall");
      auto proc = pop_proc();
      PsObject coll = pop();
      looping([&] {
        if (coll.is<PsString>()) {
          std::string bytes = *coll.as<PsString>().bytes;
          for (unsigned char c : bytes) {
            step();
            push_number(c);
            exec_proc(proc);
          }
        } else if (coll.is<PsDict>()) {
          std::vector<DictEntry> entries;
          for (const auto &[k, e] : *coll.as<PsDict>().entries) entries.push_back(e);
          for (const auto &e : entries) {
            step();
            push(e.key);
            push(e.value);
            exec_proc(proc);
          }
        } else {
          auto items = array_items(coll);
          for (std::size_t k = 0; k < items->size(); ++k) {
            step();
            push((*items)[k]);
            exec_proc(proc);
          }
        }
      });
      break;
    }
    case Op::quit:
    case Op::stop:
      throw HaltSignal{};

    // --------------------------------------------------------- composites
    case Op::array: {
      long long n = pop_int();
      if (n < 0 || n > 65535) fail(VmErrorKind::RangeCheck, "bad array size");
      push(PsObject::array(ObjectList(static_cast<std::size_t>(n), PsObject::null())));
      break;
    }
    case Op::string: {
      long long n = pop_int();
      if (n < 0 || n > 65535) fail(VmErrorKind::RangeCheck, "bad string size");
      push(PsObject::string(std::string(static_cast<std::size_t>(n), '\0')));
      break;
    }
    case Op::aload: {
      PsObject arr = pop();
      auto items = array_items(arr);
      for (const auto &o : *items) push(o);
      push(arr);
      break;
    }
    case Op::astore: {
      PsObject arr = pop();
      auto items = array_items(arr);
      need(items->size(), "astore");
      std::size_t from = ostack.size() - items->size();
      std::copy(ostack.begin() + from, ostack.end(), items->begin());
      ostack.resize(from);
      push(arr);
      break;
    }
    case Op::length: {
      PsObject o = pop();
      std::size_t n = 0;
      if (o.is<PsString>()) n = o.as<PsString>().bytes->size();
      else if (o.is<PsName>()) n = o.as<PsName>().bytes.size();
      else if (o.is<PsDict>()) n = o.as<PsDict>().entries->size();
      else n = array_items(o)->size();
      push_number(static_cast<double>(n));
      break;
    }
    case Op::get: {
      need(2, "get");
      PsObject key = pop();
      PsObject coll = pop();
      if (coll.is<PsDict>()) {
        auto &entries = *coll.as<PsDict>().entries;
        auto it = entries.find(key_of(key));
        if (it == entries.end())
          fail(VmErrorKind::UndefinedName, "key not found in dictionary");
        push(it->second.value);
      } else if (coll.is<PsString>()) {
        long long i = to_int(key);
        const auto &s = *coll.as<PsString>().bytes;
        if (i < 0 || static_cast<std::size_t>(i) >= s.size())
          fail(VmErrorKind::RangeCheck, "string index out of range");
        push_number(static_cast<unsigned char>(s[static_cast<std::size_t>(i)]));
      } else {
        auto items = array_items(coll);
        long long i = to_int(key);
        if (i < 0 || static_cast<std::size_t>(i) >= items->size())
          fail(VmErrorKind::RangeCheck, "array index out of range");
        push((*items)[static_cast<std::size_t>(i)]);
      }
      break;
    }
    case Op::put: {
      need(3, "put");
      PsObject value = pop();
      PsObject key = pop();
      PsObject coll = pop();
      if (coll.is<PsDict>()) {
        (*coll.as<PsDict>().entries)[key_of(key)] = DictEntry{stored_key(key), value};
      } else if (coll.is<PsString>()) {
        long long i = to_int(key);
        long long b = to_int(value);
        auto &s = *coll.as<PsString>().bytes;
        if (i < 0 || static_cast<std::size_t>(i) >= s.size() || b < 0 || b > 255)
          fail(VmErrorKind::RangeCheck, "string put out of range");
        s[static_cast<std::size_t>(i)] = static_cast<char>(b);
      } else {
        auto items = array_items(coll);
        long long i = to_int(key);
        if (i < 0 || static_cast<std::size_t>(i) >= items->size())
          fail(VmErrorKind::RangeCheck, "array index out of range");
        (*items)[static_cast<std::size_t>(i)] = value;
      }
      break;
    }
    case Op::getinterval: {
      need(3, "getinterval");
      long long n = pop_int();
      long long i = pop_int();
      PsObject coll = pop();
      std::size_t size = coll.is<PsString>() ? coll.as<PsString>().bytes->size()
                                             : array_items(coll)->size();
      if (i < 0 || n < 0 || static_cast<std::size_t>(i + n) > size)
        fail(VmErrorKind::RangeCheck, "interval out of range");
      auto from = static_cast<std::size_t>(i);
      auto len = static_cast<std::size_t>(n);
      if (coll.is<PsString>()) {
        push(PsObject::string(coll.as<PsString>().bytes->substr(from, len)));
      } else {
        auto items = array_items(coll);
        ObjectList part(items->begin() + from, items->begin() + from + len);
        push(coll.is<PsProcedure>() ? PsObject::procedure(std::move(part))
                                    : PsObject::array(std::move(part)));
      }
      break;
    }
    case Op::putinterval: {
      need(3, "putinterval");
      PsObject src = pop();
      long long i = pop_int();
      PsObject dst = pop();
      if (dst.is<PsString>()) {
        if (!src.is<PsString>()) type_error(src, "string");
        auto &d = *dst.as<PsString>().bytes;
        const auto &s = *src.as<PsString>().bytes;
        if (i < 0 || static_cast<std::size_t>(i) + s.size() > d.size())
          fail(VmErrorKind::RangeCheck, "interval out of range");
        std::copy(s.begin(), s.end(), d.begin() + i);
      } else {
        auto d = array_items(dst);
        auto s = array_items(src);
        if (i < 0 || static_cast<std::size_t>(i) + s->size() > d->size())
          fail(VmErrorKind::RangeCheck, "interval out of range");
        ObjectList copy = *s;
        std::copy(copy.begin(), copy.end(), d->begin() + i);
      }
      break;
    }
    case Op::cvx: {
      PsObject o = pop();
      if (o.is<PsArray>()) push(PsObject{PsProcedure{o.as<PsArray>().items}});
      else if (o.is<PsName>()) push(PsObject::executable_name(o.as<PsName>().bytes));
      else push(o);
      break;
    }
    case Op::cvlit: {
      PsObject o = pop();
      if (o.is<PsProcedure>()) push(PsObject{PsArray{o.as<PsProcedure>().body}});
      else if (o.is<PsName>()) push(PsObject::literal_name(o.as<PsName>().bytes));
      else push(o);
      break;
    }
    case Op::xcheck: {
      PsObject o = pop();
      push_bool(o.is<PsProcedure>() || o.is<PsOperator>() ||
                (o.is<PsName>() && !o.as<PsName>().literal));
      break;
    }
    case Op::cvn:
      push(PsObject::literal_name(pop_string()));
      break;
    case Op::readonly:
    case Op::executeonly:
    case Op::noaccess:
    case Op::bind:
      need(1, kOpNames[static_cast<std::size_t>(op)]);
      break;

    // ------------------------------------------------------- dictionaries
    case Op::dict: {
      long long n = pop_int();
      if (n < 0) fail(VmErrorKind::RangeCheck, "negative dictionary size");
      push(PsObject::dict());
      break;
    }
    case Op::def: {
      need(2, "def");
      PsObject value = pop();
      PsObject key = pop();
      (*dstack.back().entries)[key_of(key)] = DictEntry{stored_key(key), value};
      break;
    }
    case Op::load: {
      PsObject key = pop();
      const PsObject *v = find(key_of(key));
      if (!v) fail(VmErrorKind::UndefinedName, "'" + key_of(key) + "' is not defined");
      push(*v);
      break;
    }
    case Op::store: {
      need(2, "store");
      PsObject value = pop();
      PsObject key = pop();
      std::string k = key_of(key);
      DictStorage *target = where(k);
      if (!target) target = dstack.back().entries.get();
      (*target)[k] = DictEntry{stored_key(key), value};
      break;
    }
    case Op::begin: {
      PsObject d = pop();
      dict_of(d);
      dstack.push_back(d.as<PsDict>());
      break;
    }
    case Op::end:
      if (dstack.size() <= 2)
        fail(VmErrorKind::StackUnderflow, "end without matching begin");
      dstack.pop_back();
      break;
    case Op::known: {
      need(2, "known");
      PsObject key = pop();
      PsObject d = pop();
      push_bool(dict_of(d)->count(key_of(key)) > 0);
      break;
    }
    case Op::where: {
      PsObject key = pop();
      PsDict d = where_dict(key_of(key));
      if (d.entries) {
        push(PsObject{d});
        push_bool(true);
      } else {
        push_bool(false);
      }
      break;
    }
    case Op::currentdict: push(PsObject{dstack.back()}); break;
    case Op::userdict: push(PsObject{dstack[1]}); break;
    case Op::systemdict: push(PsObject{dstack[0]}); break;
    case Op::countdictstack:
      push_number(static_cast<double>(dstack.size()));
      break;

    // -------------------------------------------------- graphics state/CTM
    case Op::gsave:
      gstack.push_back(gs);
      gs.clip_depth = static_cast<int>(gstack.size());
      break;
    case Op::grestore:
      if (!gstack.empty()) {
        gs = gstack.back();
        gstack.pop_back();
      }
      break;
    case Op::save:
      if (config.save_restore_mode == SaveRestoreMode::Neutered) {
        push_bool(false);
      } else {
        std::uint64_t id = next_save_id++;
        saves.push_back(SaveRecord{id, gs, gstack});
        push(PsObject{PsSaveToken{id}});
      }
      break;
    case Op::restore: {
      PsObject token = pop();
      if (config.save_restore_mode == SaveRestoreMode::Neutered) break;
      if (!token.is<PsSaveToken>()) type_error(token, "save object");
      std::uint64_t id = token.as<PsSaveToken>().id;
      auto it = std::find_if(saves.begin(), saves.end(),
                             [&](const SaveRecord &r) { return r.id == id; });
      if (it == saves.end()) fail(VmErrorKind::RangeCheck, "invalid restore");
      gs = it->gs;
      gstack = it->gstack;
      saves.erase(it, saves.end());
      break;
    }
    case Op::translate:
      ctm_op(2, [](const double *v) { return Matrix::translation(v[0], v[1]); });
      break;
    case Op::scale:
      ctm_op(2, [](const double *v) { return Matrix::scaling(v[0], v[1]); });
      break;
    case Op::rotate:
      ctm_op(1, [](const double *v) { return Matrix::rotation(v[0]); });
      break;
    case Op::concat:
      gs.ctm = concat_matrix(gs.ctm, to_matrix(pop()));
      break;
    case Op::matrix:
      push(matrix_object(Matrix::identity()));
      break;
    case Op::identmatrix:
    case Op::defaultmatrix: {
      PsObject m = pop();
      store_matrix(m, Matrix::identity());
      push(m);
      break;
    }
    case Op::currentmatrix: {
      PsObject m = pop();
      store_matrix(m, gs.ctm);
      push(m);
      break;
    }
    case Op::setmatrix:
      gs.ctm = to_matrix(pop());
      break;
    case Op::initmatrix:
      gs.ctm = Matrix::identity();
      break;
    case Op::invertmatrix: {
      need(2, "invertmatrix");
      PsObject dst = pop();
      PsObject src = pop();
      store_matrix(dst, invert(to_matrix(src)));
      push(dst);
      break;
    }
    case Op::concatmatrix: {
      need(3, "concatmatrix");
      PsObject dst = pop();
      PsObject m2 = pop();
      PsObject m1 = pop();
      store_matrix(dst, concat_matrix(to_matrix(m2), to_matrix(m1)));
      push(dst);
      break;
    }
    case Op::transform: point_op(transform_point); break;
    case Op::itransform: point_op(itransform_point); break;
    case Op::dtransform: point_op(transform_delta); break;
    case Op::idtransform: point_op(idtransform_delta); break;

    // ---------------------------------------------------------------- path
    case Op::moveto:
      need(2, "moveto");
      set_point(pop_point());
      gs.subpath_start = gs.current_point;
      break;
    case Op::rmoveto: {
      need(2, "rmoveto");
      Point d = pop_point();
      Point p = require_point("rmoveto");
      set_point(p + d);
      gs.subpath_start = gs.current_point;
      break;
    }
    case Op::lineto: {
      need(2, "lineto");
      Point p = pop_point();
      require_point("lineto");
      set_point(p);
      break;
    }
    case Op::rlineto: {
      need(2, "rlineto");
      Point d = pop_point();
      set_point(require_point("rlineto") + d);
      break;
    }
    case Op::curveto: {
      need(6, "curveto");
      Point end = pop_point();
      ostack.resize(ostack.size() - 4);
      require_point("curveto");
      set_point(end);
      break;
    }
    case Op::rcurveto: {
      need(6, "rcurveto");
      Point d = pop_point();
      ostack.resize(ostack.size() - 4);
      set_point(require_point("rcurveto") + d);
      break;
    }
    case Op::closepath:
      if (gs.current_point) gs.current_point = gs.subpath_start;
      break;
    case Op::newpath:
      gs.current_point.reset();
      gs.subpath_start.reset();
      break;
    case Op::currentpoint: {
      Point p = require_point("currentpoint");
      push_number(p.x);
      push_number(p.y);
      break;
    }
    case Op::arc:
    case Op::arcn:
      arc_op();
      break;

    // ------------------------------------------------------------ painting
    case Op::stroke: case Op::fill: case Op::eofill: case Op::clip:
    case Op::eoclip: case Op::initclip:
      break;
    case Op::setlinewidth: case Op::setlinecap: case Op::setlinejoin:
    case Op::setmiterlimit: case Op::setgray: case Op::setflat:
      need(1, kOpNames[static_cast<std::size_t>(op)]);
      ostack.pop_back();
      break;
    case Op::setdash:
      need(2, "setdash");
      ostack.resize(ostack.size() - 2);
      break;
    case Op::setrgbcolor: case Op::sethsbcolor:
      need(3, kOpNames[static_cast<std::size_t>(op)]);
      ostack.resize(ostack.size() - 3);
      break;
    case Op::setcmykcolor:
      need(4, "setcmykcolor");
      ostack.resize(ostack.size() - 4);
      break;
    case Op::showpage:
      gs.current_point.reset();
      gs.subpath_start.reset();
      break;

    // --------------------------------------------------------------- fonts
    case Op::findfont: {
      PsObject key = pop();
      push(make_font(key_of(key)));
      break;
    }
    case Op::scalefont: case Op::makefont: {
      need(2, kOpNames[static_cast<std::size_t>(op)]);
      PsObject arg = pop();
      if (op == Op::scalefont) to_number(arg);
      else to_matrix(arg);
      PsObject f = pop();
      PsObject scaled = PsObject::dict();
      *scaled.as<PsDict>().entries = *dict_of(f);
      push(scaled);
      break;
    }
    case Op::setfont: {
      PsObject f = pop();
      dict_of(f);
      font = f;
      break;
    }
    case Op::definefont: {
      need(2, "definefont");
      PsObject f = pop();
      dict_of(f);
      pop();
      push(f);
      break;
    }
    case Op::currentfont:
      push(font);
      break;
    case Op::selectfont: {
      need(2, "selectfont");
      pop_number();
      PsObject key = pop();
      font = make_font(key_of(key));
      break;
    }
    case Op::stringwidth:
      pop_string();
      warn("stringwidth", "stringwidth has no font metrics; reporting zero width");
      push_number(0);
      push_number(0);
      break;

    // ---------------------------------------------------------- show family
    case Op::show: show_op("show", 0, 0); break;
    case Op::ashow: show_op("ashow", 2, 0); break;
    case Op::widthshow: show_op("widthshow", 3, 0); break;
    case Op::awidthshow: show_op("awidthshow", 5, 0); break;
    case Op::xshow: show_op("xshow", 0, 1); break;
    case Op::yshow: show_op("yshow", 0, 1); break;
    case Op::xyshow: show_op("xyshow", 0, 1); break;
    case Op::cshow: show_op("cshow", 1, 0); break;
    case Op::kshow: show_op("kshow", 1, 0); break;

    case Op::image: case Op::colorimage: case Op::imagemask:
    case Op::readhexstring: case Op::currentfile: case Op::stopped:
    case Op::run:
      fail(VmErrorKind::UnsupportedOperator,
           "'" + std::string(kOpNames[static_cast<std::size_t>(op)]) +
               "' is not supported");

    case Op::count_:
      break;
  }
}

Vm::Vm(VmConfig config) : impl_(std::make_unique<Impl>(config)) {}
Vm::~Vm() = default;

void Vm::run(const ObjectList &program) {
  impl_->run_top(program);
  if (!impl_->gstack.empty())
    impl_->warn("gsave-balance", "program left " +
                                     std::to_string(impl_->gstack.size()) +
                                     " unmatched gsave(s)");
}

void Vm::run(std::span<const Token> program) { run(build_program(program)); }

void Vm::run_source(std::string_view source) { run(tokenize(source)); }

const ObjectList &Vm::operand_stack() const { return impl_->ostack; }
const GraphicsState &Vm::graphics_state() const { return impl_->gs; }
const LabelTable &Vm::labels() const { return impl_->labels; }
const std::vector<Warning> &Vm::warnings() const { return impl_->warnings; }
std::uint64_t Vm::steps_used() const { return impl_->steps; }

std::optional<PsObject> Vm::lookup(std::string_view name) const {
  const PsObject *v = impl_->find(name);
  if (!v) return std::nullopt;
  return *v;
}

ExtractionResult Vm::result() const {
  return ExtractionResult{impl_->labels, impl_->warnings, impl_->steps};
}

ExtractionResult execute(std::span<const Token> program, const VmConfig &config) {
  Vm vm(config);
  vm.run(program);
  return vm.result();
}

}  // namespace figrelabel

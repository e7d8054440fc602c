#include "figrelabel/syntax.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>

namespace figrelabel {

const char *token_kind_name(TokenKind kind) {
  switch (kind) {
    case TokenKind::Integer: return "Integer";
    case TokenKind::Real: return "Real";
    case TokenKind::RadixNumber: return "RadixNumber";
    case TokenKind::LiteralName: return "LiteralName";
    case TokenKind::ExecutableName: return "ExecutableName";
    case TokenKind::String: return "String";
    case TokenKind::HexString: return "HexString";
    case TokenKind::ProcOpen: return "ProcOpen";
    case TokenKind::ProcClose: return "ProcClose";
    case TokenKind::ArrayOpen: return "ArrayOpen";
    case TokenKind::ArrayClose: return "ArrayClose";
    case TokenKind::DscComment: return "DscComment";
  }
  return "?";
}

const char *syntax_error_kind_name(SyntaxErrorKind kind) {
  switch (kind) {
    case SyntaxErrorKind::UnterminatedString: return "UnterminatedString";
    case SyntaxErrorKind::InvalidHexString: return "InvalidHexString";
    case SyntaxErrorKind::InvalidRadixNumber: return "InvalidRadixNumber";
    case SyntaxErrorKind::UnsupportedAscii85: return "UnsupportedAscii85";
    case SyntaxErrorKind::UnsupportedDictLiteral: return "UnsupportedDictLiteral";
    case SyntaxErrorKind::UnbalancedDelimiter: return "UnbalancedDelimiter";
    case SyntaxErrorKind::MalformedBoundingBox: return "MalformedBoundingBox";
  }
  return "?";
}

namespace {

std::string describe(SyntaxErrorKind kind, SourcePos pos,
                     const std::string &detail) {
  std::string msg = syntax_error_kind_name(kind);
  msg += " at line " + std::to_string(pos.line) + ", byte offset " +
         std::to_string(pos.offset);
  if (!detail.empty()) msg += ": " + detail;
  return msg;
}

bool is_space(unsigned char c) {
  return c == 0 || c == '\t' || c == '\n' || c == '\f' || c == '\r' ||
         c == ' ';
}

bool is_delimiter(unsigned char c) {
  switch (c) {
    case '(': case ')': case '<': case '>': case '[': case ']':
    case '{': case '}': case '/': case '%':
      return true;
    default:
      return false;
  }
}

bool is_regular(unsigned char c) { return !is_space(c) && !is_delimiter(c); }

int hex_value(unsigned char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

int digit_value(unsigned char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'z') return c - 'a' + 10;
  if (c >= 'A' && c <= 'Z') return c - 'A' + 10;
  return 99;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return c >= '0' && c <= '9';
  });
}

// Decimal integer or real in PostScript syntax.
bool parse_decimal(std::string_view text, TokenKind &kind, double &value) {
  std::string_view body = text;
  if (!body.empty() && (body[0] == '+' || body[0] == '-')) body.remove_prefix(1);
  if (body.empty()) return false;

  std::string_view mantissa = body;
  std::string_view exponent;
  if (auto e = body.find_first_of("eE"); e != std::string_view::npos) {
    mantissa = body.substr(0, e);
    exponent = body.substr(e + 1);
    if (!exponent.empty() && (exponent[0] == '+' || exponent[0] == '-'))
      exponent.remove_prefix(1);
    if (!all_digits(exponent)) return false;
  }
  bool has_point = false;
  if (auto dot = mantissa.find('.'); dot != std::string_view::npos) {
    has_point = true;
    std::string_view whole = mantissa.substr(0, dot);
    std::string_view frac = mantissa.substr(dot + 1);
    if (whole.empty() && frac.empty()) return false;
    if (!whole.empty() && !all_digits(whole)) return false;
    if (!frac.empty() && !all_digits(frac)) return false;
  } else if (!all_digits(mantissa)) {
    return false;
  }

  // from_chars rejects a leading '+'.
  std::string_view digits = text[0] == '+' ? text.substr(1) : text;
  auto [ptr, ec] =
      std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec == std::errc::result_out_of_range) {
    value = (digits[0] == '-') ? -HUGE_VAL : HUGE_VAL;
  } else if (ec != std::errc() || ptr != digits.data() + digits.size()) {
    return false;
  }
  kind = (has_point || !exponent.empty()) ? TokenKind::Real : TokenKind::Integer;
  return true;
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {
    line_starts_.push_back(0);
    for (std::size_t i = 0; i < src_.size(); ++i) {
      if (src_[i] == '\n') {
        line_starts_.push_back(i + 1);
      } else if (src_[i] == '\r') {
        if (i + 1 < src_.size() && src_[i + 1] == '\n') ++i;
        line_starts_.push_back(i + 1);
      }
    }
  }

  std::vector<Token> run() {
    std::vector<Token> out;
    while (i_ < src_.size()) {
      unsigned char c = src_[i_];
      if (is_space(c)) {
        ++i_;
        continue;
      }
      std::size_t start = i_;
      switch (c) {
        case '%':
          lex_comment(out);
          break;
        case '(':
          out.push_back(lex_string());
          break;
        case '<':
          out.push_back(lex_hex());
          break;
        case ')':
          fail(SyntaxErrorKind::UnbalancedDelimiter, start, "stray ')'");
        case '>':
          if (peek(1) == '>')
            fail(SyntaxErrorKind::UnsupportedDictLiteral, start,
                 "'>>' dictionary literals are not supported");
          fail(SyntaxErrorKind::UnbalancedDelimiter, start, "stray '>'");
        case '[':
          out.push_back(simple(TokenKind::ArrayOpen, start, 1));
          break;
        case ']':
          out.push_back(simple(TokenKind::ArrayClose, start, 1));
          break;
        case '{':
          out.push_back(simple(TokenKind::ProcOpen, start, 1));
          break;
        case '}':
          out.push_back(simple(TokenKind::ProcClose, start, 1));
          break;
        case '/':
          out.push_back(lex_literal_name());
          break;
        default:
          out.push_back(lex_regular());
          break;
      }
    }
    return out;
  }

 private:
  SourcePos pos_at(std::size_t offset) const {
    auto it = std::upper_bound(line_starts_.begin(), line_starts_.end(), offset);
    return SourcePos{offset, static_cast<std::size_t>(it - line_starts_.begin())};
  }

  [[noreturn]] void fail(SyntaxErrorKind kind, std::size_t offset,
                         const std::string &detail) const {
    throw SyntaxError(kind, pos_at(offset), detail);
  }

  int peek(std::size_t ahead) const {
    std::size_t j = i_ + ahead;
    return j < src_.size() ? static_cast<unsigned char>(src_[j]) : -1;
  }

  Token simple(TokenKind kind, std::size_t start, std::size_t len) {
    i_ = start + len;
    return Token{kind, src_.substr(start, len), std::nullopt, 0.0,
                 pos_at(start)};
  }

  bool at_line_start(std::size_t offset) const {
    return offset == 0 || src_[offset - 1] == '\n' || src_[offset - 1] == '\r';
  }

  void lex_comment(std::vector<Token> &out) {
    std::size_t start = i_;
    std::size_t end = src_.find_first_of("\r\n", start);
    if (end == std::string_view::npos) end = src_.size();
    i_ = end;
    int next = start + 1 < src_.size()
                   ? static_cast<unsigned char>(src_[start + 1])
                   : -1;
    if (at_line_start(start) && (next == '%' || next == '!')) {
      out.push_back(Token{TokenKind::DscComment,
                          src_.substr(start, end - start), std::nullopt, 0.0,
                          pos_at(start)});
    }
  }

  Token lex_string() {
    std::size_t start = i_;
    std::string bytes;
    int depth = 1;
    ++i_;
    while (true) {
      if (i_ >= src_.size())
        fail(SyntaxErrorKind::UnterminatedString, start,
             "end of input inside string");
      unsigned char c = src_[i_++];
      if (c == '\\') {
        if (i_ >= src_.size())
          fail(SyntaxErrorKind::UnterminatedString, start,
               "end of input inside string");
        unsigned char e = src_[i_++];
        switch (e) {
          case 'n': bytes.push_back('\n'); break;
          case 'r': bytes.push_back('\r'); break;
          case 't': bytes.push_back('\t'); break;
          case 'b': bytes.push_back('\b'); break;
          case 'f': bytes.push_back('\f'); break;
          case '\\': bytes.push_back('\\'); break;
          case '(': bytes.push_back('('); break;
          case ')': bytes.push_back(')'); break;
          case '\n': break;
          case '\r':
            if (i_ < src_.size() && src_[i_] == '\n') ++i_;
            break;
          default:
            if (e >= '0' && e <= '7') {
              unsigned value = e - '0';
              for (int k = 0; k < 2 && i_ < src_.size() && src_[i_] >= '0' &&
                              src_[i_] <= '7';
                   ++k) {
                value = value * 8 + (src_[i_++] - '0');
              }
              bytes.push_back(static_cast<char>(value & 0xFF));
            } else {
              bytes.push_back(static_cast<char>(e));
            }
        }
      } else if (c == '(') {
        ++depth;
        bytes.push_back('(');
      } else if (c == ')') {
        if (--depth == 0) break;
        bytes.push_back(')');
      } else if (c == '\r') {
        if (i_ < src_.size() && src_[i_] == '\n') ++i_;
        bytes.push_back('\n');
      } else {
        bytes.push_back(static_cast<char>(c));
      }
    }
    return Token{TokenKind::String, src_.substr(start, i_ - start),
                 std::move(bytes), 0.0, pos_at(start)};
  }

  Token lex_hex() {
    std::size_t start = i_;
    if (peek(1) == '<')
      fail(SyntaxErrorKind::UnsupportedDictLiteral, start,
           "'<<' dictionary literals are not supported");
    if (peek(1) == '~')
      fail(SyntaxErrorKind::UnsupportedAscii85, start,
           "ASCII85 strings are not supported");
    ++i_;
    std::string bytes;
    int pending = -1;
    while (true) {
      if (i_ >= src_.size())
        fail(SyntaxErrorKind::InvalidHexString, start,
             "end of input inside hex string");
      unsigned char c = src_[i_];
      if (c == '>') {
        ++i_;
        break;
      }
      if (is_space(c)) {
        ++i_;
        continue;
      }
      int v = hex_value(c);
      if (v < 0)
        fail(SyntaxErrorKind::InvalidHexString, i_,
             std::string("non-hex character '") + static_cast<char>(c) + "'");
      if (pending < 0) {
        pending = v;
      } else {
        bytes.push_back(static_cast<char>(pending * 16 + v));
        pending = -1;
      }
      ++i_;
    }
    if (pending >= 0) bytes.push_back(static_cast<char>(pending * 16));
    return Token{TokenKind::HexString, src_.substr(start, i_ - start),
                 std::move(bytes), 0.0, pos_at(start)};
  }

  Token lex_literal_name() {
    std::size_t start = i_;
    ++i_;
    bool immediate = false;
    if (i_ < src_.size() && src_[i_] == '/') {
      immediate = true;
      ++i_;
    }
    while (i_ < src_.size() && is_regular(src_[i_])) ++i_;
    // `//name` is looked up when executed rather than at scan time.
    return Token{immediate ? TokenKind::ExecutableName : TokenKind::LiteralName,
                 src_.substr(start, i_ - start), std::nullopt, 0.0,
                 pos_at(start)};
  }

  Token lex_regular() {
    std::size_t start = i_;
    while (i_ < src_.size() && is_regular(src_[i_])) ++i_;
    std::string_view text = src_.substr(start, i_ - start);
    Token tok{TokenKind::ExecutableName, text, std::nullopt, 0.0,
              pos_at(start)};

    TokenKind kind;
    double value = 0;
    if (parse_decimal(text, kind, value)) {
      tok.kind = kind;
      tok.number = value;
      return tok;
    }
    if (auto hash = text.find('#');
        hash != std::string_view::npos && hash > 0 &&
        all_digits(text.substr(0, hash))) {
      std::string_view base_text = text.substr(0, hash);
      std::string_view digits = text.substr(hash + 1);
      int base = 0;
      auto [p, ec] = std::from_chars(base_text.data(),
                                     base_text.data() + base_text.size(), base);
      if (ec != std::errc() || base < 2 || base > 36)
        fail(SyntaxErrorKind::InvalidRadixNumber, start,
             "radix must be in 2..36");
      if (digits.empty())
        fail(SyntaxErrorKind::InvalidRadixNumber, start, "missing digits");
      double acc = 0;
      for (std::size_t k = 0; k < digits.size(); ++k) {
        int d = digit_value(static_cast<unsigned char>(digits[k]));
        if (d >= base)
          fail(SyntaxErrorKind::InvalidRadixNumber, start + hash + 1 + k,
               "digit out of range for base " + std::to_string(base));
        acc = acc * base + d;
      }
      tok.kind = TokenKind::RadixNumber;
      tok.number = acc;
    }
    return tok;
  }

  std::string_view src_;
  std::size_t i_ = 0;
  std::vector<std::size_t> line_starts_;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

}  // namespace

SyntaxError::SyntaxError(SyntaxErrorKind kind, SourcePos pos,
                         const std::string &detail)
    : std::runtime_error(describe(kind, pos, detail)), kind_(kind), pos_(pos) {}

std::vector<Token> tokenize(std::string_view source) {
  return Lexer(source).run();
}

std::optional<BoundingBox> parse_bounding_box_line(std::string_view line,
                                                   SourcePos pos) {
  constexpr std::string_view kKey = "%%BoundingBox:";
  std::string_view rest = trim(line.substr(std::min(kKey.size(), line.size())));
  if (rest == "(atend)") return std::nullopt;

  std::array<double, 4> v{};
  const char *p = rest.data();
  const char *end = rest.data() + rest.size();
  for (std::size_t k = 0; k < 4; ++k) {
    while (p < end && is_space(*p)) ++p;
    if (p < end && *p == '+') ++p;
    auto [next, ec] = std::from_chars(p, end, v[k]);
    if (ec != std::errc() || (next < end && !is_space(*next)))
      throw SyntaxError(SyntaxErrorKind::MalformedBoundingBox, pos,
                        "expected four numbers in '" + std::string(line) + "'");
    p = next;
  }
  while (p < end && is_space(*p)) ++p;
  if (p != end)
    throw SyntaxError(SyntaxErrorKind::MalformedBoundingBox, pos,
                      "trailing text in '" + std::string(line) + "'");
  BoundingBox box{v[0], v[1], v[2], v[3]};
  if (box.urx < box.llx || box.ury < box.lly)
    throw SyntaxError(SyntaxErrorKind::MalformedBoundingBox, pos,
                      "upper-right corner below lower-left");
  return box;
}

DocumentMeta parse_dsc(std::string_view source) {
  DocumentMeta meta;
  bool bbox_seen = false;
  bool bbox_atend = false;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < source.size()) {
    ++line_no;
    std::size_t end = source.find_first_of("\r\n", start);
    if (end == std::string_view::npos) end = source.size();
    std::string_view line = source.substr(start, end - start);
    SourcePos pos{start, line_no};

    if (starts_with(line, "%%") || starts_with(line, "%!")) {
      meta.other_comments.emplace_back(line);
      if (line_no == 1 && starts_with(line, "%!PS-Adobe") &&
          line.find("EPSF") != std::string_view::npos) {
        meta.is_eps = true;
      } else if (starts_with(line, "%%BoundingBox:")) {
        if (!bbox_seen) {
          bbox_seen = true;
          meta.bounding_box = parse_bounding_box_line(line, pos);
          bbox_atend = !meta.bounding_box.has_value();
        } else if (bbox_atend) {
          if (auto box = parse_bounding_box_line(line, pos)) {
            meta.bounding_box = box;
          }
        }
      } else if (starts_with(line, "%%Title:") && !meta.title) {
        meta.title = std::string(trim(line.substr(8)));
      }
    }

    start = end;
    if (start < source.size() && source[start] == '\r') ++start;
    if (start < source.size() && source[start] == '\n') ++start;
  }
  return meta;
}

std::string escape_ps_string(std::string_view bytes) {
  std::string out;
  out.reserve(bytes.size());
  for (unsigned char c : bytes) {
    if (c == '(' || c == ')' || c == '\\') {
      out.push_back('\\');
      out.push_back(static_cast<char>(c));
    } else if (c >= 32 && c <= 126) {
      out.push_back(static_cast<char>(c));
    } else {
      char buf[5] = {'\\', static_cast<char>('0' + ((c >> 6) & 7)),
                     static_cast<char>('0' + ((c >> 3) & 7)),
                     static_cast<char>('0' + (c & 7)), 0};
      out += buf;
    }
  }
  return out;
}

}  // namespace figrelabel

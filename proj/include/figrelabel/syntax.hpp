#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace figrelabel {

struct SourcePos {
  std::size_t offset = 0;
  std::size_t line = 1;
};

enum class TokenKind {
  Integer,
  Real,
  RadixNumber,
  LiteralName,
  ExecutableName,
  String,
  HexString,
  ProcOpen,
  ProcClose,
  ArrayOpen,
  ArrayClose,
  DscComment,
};

const char *token_kind_name(TokenKind kind);

struct Token {
  TokenKind kind;
  std::string_view text;  // slice of the tokenized source
  std::optional<std::string> decoded;  // String / HexString only
  double number = 0.0;  // Integer / Real / RadixNumber only
  SourcePos pos;

  bool is_number() const {
    return kind == TokenKind::Integer || kind == TokenKind::Real ||
           kind == TokenKind::RadixNumber;
  }
};

enum class SyntaxErrorKind {
  UnterminatedString,
  InvalidHexString,
  InvalidRadixNumber,
  UnsupportedAscii85,
  UnsupportedDictLiteral,
  UnbalancedDelimiter,
  MalformedBoundingBox,
};

const char *syntax_error_kind_name(SyntaxErrorKind kind);

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(SyntaxErrorKind kind, SourcePos pos, const std::string &detail);

  SyntaxErrorKind kind() const { return kind_; }
  const SourcePos &pos() const { return pos_; }

 private:
  SyntaxErrorKind kind_;
  SourcePos pos_;
};

/// Splits PostScript program text into tokens. Operates on raw bytes; the
/// returned tokens reference `source`, which must outlive them.
///
/// `%` comments are dropped except for lines that begin with `%%` or `%!`,
/// which come back as DscComment tokens spanning the rest of the line.
std::vector<Token> tokenize(std::string_view source);

struct BoundingBox {
  double llx = 0, lly = 0, urx = 0, ury = 0;

  double width() const { return urx - llx; }
  double height() const { return ury - lly; }
  bool operator==(const BoundingBox &) const = default;
};

struct DocumentMeta {
  std::optional<BoundingBox> bounding_box;
  bool is_eps = false;
  std::optional<std::string> title;
  std::vector<std::string> other_comments;  // every DSC line, raw, in order
};

/// Reads the DSC comments of an EPS file. `%%BoundingBox: (atend)` is
/// resolved from the trailer.
DocumentMeta parse_dsc(std::string_view source);

/// Parses the four numbers following `%%BoundingBox:`; nullopt means the
/// line is `(atend)`.
std::optional<BoundingBox> parse_bounding_box_line(std::string_view line,
                                                   SourcePos pos);

/// Encodes bytes as a PostScript string literal body (without the
/// parentheses). `(`, `)` and `\` are backslash-escaped; bytes outside
/// 32..126 become three-digit octal escapes.
std::string escape_ps_string(std::string_view bytes);

}  // namespace figrelabel

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gmeta/error.hpp"
#include "gmeta/form.hpp"

namespace gmeta {

enum class ParseErrorKind { indentation, unknown_keyword, malformed_field, malformed_splice, structure };

std::string_view to_string(ParseErrorKind kind);

class ParseError : public Error {
 public:
  ParseError(ParseErrorKind kind, std::string message, int line, int column);

  ParseErrorKind kind() const noexcept { return kind_; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ParseErrorKind kind_;
  std::string detail_;
  int line_;
  int column_;
};

/// `*(expr)` inserts a scalar or a subtree; `$(...expr)` inserts a list of
/// forms as consecutive siblings and is only legal in child position.
struct SpliceMark {
  enum class Variant { scalar_or_form, spread };

  Variant variant = Variant::scalar_or_form;
  std::string expression;
  int line = 0;
  int column = 0;
};

struct SourceNode;

struct SourceField {
  using Part = std::variant<std::string, SpliceMark>;

  std::string key;
  /// Value text exactly as written (continuation lines keep their indent
  /// relative to the field line; quote blocks start with "quote\n").
  std::string raw;
  /// raw split at splice sites. Empty for quote blocks.
  std::vector<Part> parts;
  std::shared_ptr<const SourceNode> quoted;
  int line = 0;
  int column = 0;
};

struct SourceVariant {
  std::string key;
  std::string literal;
  std::optional<SpliceMark> splice;
};

struct SourceNode {
  std::string kind_word;
  std::optional<std::string> name;
  std::optional<SourceVariant> variant;
  std::vector<std::string> content;
  std::vector<SourceField> fields;
  std::vector<SourceNode> children;
  /// Set on child-position splice sites; such nodes carry nothing else.
  std::optional<SpliceMark> splice;
  int line = 0;
  int column = 0;
};

/// Parses a `.mt` source into a validated machine-rooted Form. Throws
/// ParseError.
Form parse_source(std::string_view text);

/// Parses a dedented quote block into a template tree; splice expressions
/// are captured as text and never evaluated.
SourceNode parse_quote(std::string_view block);

std::size_t count_splices(const SourceNode& node);

/// Converts a splice-free template into a Form (no validation).
Form to_form(const SourceNode& node);

/// Canonical text. Throws invalid-form when validate(f) is non-empty.
std::string print(const Form& f);

/// Total rendering used for hashing; equals print(f) on valid forms.
std::string render(const Form& f);

/// Literal syntax for a value: quoted strings, shortest numbers, `[..]`,
/// `{k: v}`. Expressions render as their text.
std::string render_literal(const Value& v);

std::string quote_string(std::string_view s);

}  // namespace gmeta

#pragma once

// Character-level helpers shared by the line parser and the expression lexer.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace gmeta::lex {

struct StringLiteral {
  std::string value;
  std::size_t end;  // one past the closing quote
};

/// Decodes the string literal starting at s[pos] == '"'. nullopt when it is
/// unterminated or has a bad escape.
std::optional<StringLiteral> scan_string(std::string_view s, std::size_t pos);

/// Position of `needle` at or after `from`, skipping string literals.
std::size_t find_unquoted(std::string_view s, std::string_view needle, std::size_t from = 0);

/// Removes a `#` comment (outside string literals).
std::string_view strip_comment(std::string_view line);

/// Net bracket depth change of ([{ vs )]} outside string literals. Sets
/// `went_negative` when a prefix closes more than it opened, relative to
/// `start_depth`.
int bracket_delta(std::string_view s, int start_depth, bool& went_negative);

/// Index of the ')' balancing the '(' at s[open], or npos.
std::size_t matching_paren(std::string_view s, std::size_t open);

std::string_view trim(std::string_view s);
std::string_view rtrim(std::string_view s);

inline bool is_ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
inline bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

}  // namespace gmeta::lex

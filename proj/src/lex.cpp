#include "lex.hpp"

namespace gmeta::lex {
namespace {

void append_utf8(std::string& out, unsigned cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

// Index just past the string literal opening at s[pos], or npos.
std::size_t skip_string(std::string_view s, std::size_t pos) {
  for (std::size_t i = pos + 1; i < s.size(); ++i) {
    if (s[i] == '\\') {
      ++i;
    } else if (s[i] == '"') {
      return i + 1;
    }
  }
  return std::string_view::npos;
}

}  // namespace

std::optional<StringLiteral> scan_string(std::string_view s, std::size_t pos) {
  std::string out;
  for (std::size_t i = pos + 1; i < s.size(); ++i) {
    char c = s[i];
    if (c == '"') return StringLiteral{std::move(out), i + 1};
    if (c == '\n') return std::nullopt;
    if (c != '\\') {
      out += c;
      continue;
    }
    if (++i >= s.size()) return std::nullopt;
    switch (s[i]) {
      case '"': out += '"'; break;
      case '\\': out += '\\'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      case 't': out += '\t'; break;
      case 'u': {
        if (i + 4 >= s.size()) return std::nullopt;
        unsigned cp = 0;
        for (int k = 1; k <= 4; ++k) {
          int h = hex_value(s[i + k]);
          if (h < 0) return std::nullopt;
          cp = cp * 16 + static_cast<unsigned>(h);
        }
        append_utf8(out, cp);
        i += 4;
        break;
      }
      default: return std::nullopt;
    }
  }
  return std::nullopt;
}

std::size_t find_unquoted(std::string_view s, std::string_view needle, std::size_t from) {
  for (std::size_t i = from; i < s.size();) {
    if (s[i] == '"') {
      i = skip_string(s, i);
      if (i == std::string_view::npos) return std::string_view::npos;
      continue;
    }
    if (s.compare(i, needle.size(), needle) == 0) return i;
    ++i;
  }
  return std::string_view::npos;
}

std::string_view strip_comment(std::string_view line) {
  auto pos = find_unquoted(line, "#");
  return pos == std::string_view::npos ? line : line.substr(0, pos);
}

int bracket_delta(std::string_view s, int start_depth, bool& went_negative) {
  int depth = start_depth;
  for (std::size_t i = 0; i < s.size();) {
    char c = s[i];
    if (c == '"') {
      i = skip_string(s, i);
      if (i == std::string_view::npos) break;
      continue;
    }
    if (c == '(' || c == '[' || c == '{') ++depth;
    if (c == ')' || c == ']' || c == '}') {
      if (--depth < 0) went_negative = true;
    }
    ++i;
  }
  return depth - start_depth;
}

std::size_t matching_paren(std::string_view s, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < s.size();) {
    char c = s[i];
    if (c == '"') {
      i = skip_string(s, i);
      if (i == std::string_view::npos) return std::string_view::npos;
      continue;
    }
    if (c == '(') ++depth;
    if (c == ')' && --depth == 0) return i;
    ++i;
  }
  return std::string_view::npos;
}

std::string_view trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string_view rtrim(std::string_view s) {
  auto e = s.find_last_not_of(" \t\r\n");
  if (e == std::string_view::npos) return {};
  return s.substr(0, e + 1);
}

}  // namespace gmeta::lex

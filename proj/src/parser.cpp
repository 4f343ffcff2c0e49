#include "gmeta/parser.hpp"

#include <map>

#include "gmeta/expression.hpp"
#include "gmeta/form_ops.hpp"
#include "lex.hpp"

namespace gmeta {

std::string_view to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::indentation: return "indentation";
    case ParseErrorKind::unknown_keyword: return "unknown-keyword";
    case ParseErrorKind::malformed_field: return "malformed-field";
    case ParseErrorKind::malformed_splice: return "malformed-splice";
    case ParseErrorKind::structure: return "structure";
  }
  return "?";
}

ParseError::ParseError(ParseErrorKind kind, std::string message, int line, int column)
    : Error(ErrorCode::parse_error, std::to_string(line) + ":" + std::to_string(column) + ": " +
                                        std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      detail_(std::move(message)),
      line_(line),
      column_(column) {}

namespace {

struct Line {
  int number = 0;
  int indent = 0;
  std::string text;
};

std::vector<Line> split_lines(std::string_view src) {
  std::vector<Line> out;
  int number = 0;
  std::size_t pos = 0;
  while (pos < src.size()) {
    auto nl = src.find('\n', pos);
    auto raw = src.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? src.size() : nl + 1;
    ++number;
    std::size_t i = 0;
    while (i < raw.size() && (raw[i] == ' ' || raw[i] == '\t')) ++i;
    auto body = lex::rtrim(lex::strip_comment(raw.substr(i)));
    if (body.empty()) continue;
    if (auto tab = raw.substr(0, i).find('\t'); tab != std::string_view::npos) {
      throw ParseError(ParseErrorKind::indentation, "tab in indentation", number, static_cast<int>(tab) + 1);
    }
    out.push_back({number, static_cast<int>(i), std::string(body)});
  }
  return out;
}

std::string spaces(int n) { return std::string(static_cast<std::size_t>(std::max(n, 0)), ' '); }

std::optional<Value> scalar_literal(std::string_view text) {
  try {
    auto e = parse_expression(text);
    if (const auto* lit = std::get_if<expr::Literal>(&e->node); lit && lit->value.is_scalar()) {
      return lit->value;
    }
  } catch (const Error&) {
  }
  return std::nullopt;
}

class LineParser {
 public:
  LineParser(std::vector<Line> lines, bool quote_mode) : lines_(std::move(lines)), quote_(quote_mode) {}

  SourceNode parse_root(int base) {
    base_ = base;
    if (lines_.empty()) throw ParseError(ParseErrorKind::structure, "empty source", 1, 1);
    const Line& first = lines_.front();
    if (first.indent != base) {
      throw ParseError(ParseErrorKind::indentation, "root form must not be indented", first.number,
                       first.indent + 1);
    }
    if (first.text.rfind("*(", 0) == 0 || first.text.rfind("$(", 0) == 0) {
      throw ParseError(ParseErrorKind::malformed_splice, "splice cannot be the root form", first.number,
                       first.indent + 1);
    }
    if (first.text[0] == '"' || field_key_length(first.text) > 0) {
      throw ParseError(ParseErrorKind::malformed_field, "expected a kind keyword", first.number,
                       first.indent + 1);
    }
    SourceNode root = parse_header(first);
    std::size_t pos = 1;
    parse_block(root, base + 2, pos);
    if (pos < lines_.size()) {
      const Line& extra = lines_[pos];
      if ((extra.indent - base_) % 2 != 0) {
        throw ParseError(ParseErrorKind::indentation, "indentation must be a multiple of two spaces",
                         extra.number, extra.indent + 1);
      }
      throw ParseError(ParseErrorKind::structure, "more than one root form", extra.number, extra.indent + 1);
    }
    return root;
  }

 private:
  // Length of `key` when the line starts with `key:`, else 0.
  static std::size_t field_key_length(std::string_view text) {
    if (text.empty() || !lex::is_ident_start(text[0])) return 0;
    std::size_t i = 1;
    while (i < text.size() && lex::is_ident_char(text[i])) ++i;
    return i < text.size() && text[i] == ':' ? i : 0;
  }

  void parse_block(SourceNode& parent, int indent, std::size_t& pos) {
    while (pos < lines_.size()) {
      const Line& line = lines_[pos];
      if (line.indent < indent) return;
      if ((line.indent - base_) % 2 != 0) {
        throw ParseError(ParseErrorKind::indentation, "indentation must be a multiple of two spaces",
                         line.number, line.indent + 1);
      }
      if (line.indent > indent) {
        throw ParseError(ParseErrorKind::indentation, "unexpected indentation", line.number,
                         line.indent + 1);
      }
      const std::string& t = line.text;
      if (t[0] == '"') {
        parse_content(parent, line);
        ++pos;
      } else if (t.rfind("*(", 0) == 0 || t.rfind("$(", 0) == 0) {
        parent.children.push_back(parse_child_splice(line));
        ++pos;
      } else if (auto klen = field_key_length(t)) {
        parse_field(parent, pos, klen);
      } else if (lex::is_ident_start(t[0])) {
        SourceNode child = parse_header(line);
        ++pos;
        parse_block(child, indent + 2, pos);
        parent.children.push_back(std::move(child));
      } else {
        throw ParseError(ParseErrorKind::malformed_field, "expected a keyword, field or content line",
                         line.number, line.indent + 1);
      }
    }
  }

  void parse_content(SourceNode& parent, const Line& line) {
    auto lit = lex::scan_string(line.text, 0);
    if (!lit || lit->end != line.text.size()) {
      throw ParseError(ParseErrorKind::malformed_field, "content line must be one string literal",
                       line.number, line.indent + 1);
    }
    parent.content.push_back(std::move(lit->value));
  }

  SourceNode parse_child_splice(const Line& line) {
    const std::string& t = line.text;
    int col = line.indent + 1;
    if (!quote_) throw ParseError(ParseErrorKind::malformed_splice, "splice outside a quote block", line.number, col);
    auto close = lex::matching_paren(t, 1);
    if (close == std::string::npos) {
      throw ParseError(ParseErrorKind::malformed_splice, "unbalanced parentheses in splice", line.number, col);
    }
    if (close != t.size() - 1) {
      throw ParseError(ParseErrorKind::malformed_splice, "unexpected text after splice", line.number,
                       col + static_cast<int>(close) + 1);
    }
    SpliceMark mark;
    mark.line = line.number;
    mark.column = col;
    std::string_view inner = std::string_view(t).substr(2, close - 2);
    if (t[0] == '$') {
      inner = lex::trim(inner);
      if (inner.rfind("...", 0) != 0) {
        throw ParseError(ParseErrorKind::malformed_splice, "spread splice is written $(...expr)", line.number, col);
      }
      inner.remove_prefix(3);
      mark.variant = SpliceMark::Variant::spread;
    }
    mark.expression = std::string(lex::trim(inner));
    if (mark.expression.empty()) {
      throw ParseError(ParseErrorKind::malformed_splice, "empty splice expression", line.number, col);
    }
    SourceNode node;
    node.splice = std::move(mark);
    node.line = line.number;
    node.column = col;
    return node;
  }

  SourceNode parse_header(const Line& line) {
    const std::string& t = line.text;
    int col0 = line.indent + 1;
    auto err = [&](ParseErrorKind kind, const std::string& msg, std::size_t at) {
      return ParseError(kind, msg, line.number, col0 + static_cast<int>(at));
    };
    std::size_t i = 0;
    while (i < t.size() && lex::is_ident_char(t[i])) ++i;
    SourceNode node;
    node.kind_word = t.substr(0, i);
    node.line = line.number;
    node.column = col0;
    if (!kind_from_keyword(node.kind_word)) {
      throw err(ParseErrorKind::unknown_keyword, "unknown keyword '" + node.kind_word + "'", 0);
    }
    auto skip_ws = [&] {
      while (i < t.size() && t[i] == ' ') ++i;
    };
    skip_ws();
    if (i < t.size() && lex::is_ident_start(t[i])) {
      std::size_t b = i;
      while (i < t.size() && lex::is_ident_char(t[i])) ++i;
      node.name = t.substr(b, i - b);
      skip_ws();
    }
    if (i < t.size() && t[i] == ',') {
      ++i;
      skip_ws();
      std::size_t kb = i;
      while (i < t.size() && lex::is_ident_char(t[i])) ++i;
      if (kb == i || i >= t.size() || t[i] != ':') {
        throw err(ParseErrorKind::malformed_field, "expected `key: value` after ','", kb);
      }
      SourceVariant var;
      var.key = t.substr(kb, i - kb);
      ++i;
      skip_ws();
      std::size_t vb = i;
      var.literal = std::string(lex::trim(std::string_view(t).substr(i)));
      if (var.literal.empty()) throw err(ParseErrorKind::malformed_field, "missing variant value", vb);
      if (var.literal.rfind("*(", 0) == 0) {
        if (!quote_) throw err(ParseErrorKind::malformed_splice, "splice outside a quote block", vb);
        auto close = lex::matching_paren(var.literal, 1);
        if (close == std::string::npos || close != var.literal.size() - 1) {
          throw err(ParseErrorKind::malformed_splice, "malformed splice in variant clause", vb);
        }
        SpliceMark mark;
        mark.expression = std::string(lex::trim(std::string_view(var.literal).substr(2, close - 2)));
        mark.line = line.number;
        mark.column = col0 + static_cast<int>(vb);
        if (mark.expression.empty()) throw err(ParseErrorKind::malformed_splice, "empty splice expression", vb);
        var.splice = std::move(mark);
      } else if (!scalar_literal(var.literal)) {
        throw err(ParseErrorKind::malformed_field, "variant value must be one scalar literal", vb);
      }
      node.variant = std::move(var);
      i = t.size();
    }
    if (i < t.size()) throw err(ParseErrorKind::malformed_field, "unexpected text in header", i);
    return node;
  }

  void parse_field(SourceNode& parent, std::size_t& pos, std::size_t klen) {
    const Line& line = lines_[pos];
    const std::string& t = line.text;
    SourceField field;
    field.key = t.substr(0, klen);
    field.line = line.number;
    field.column = line.indent + 1;
    for (const auto& f : parent.fields) {
      if (f.key == field.key) {
        throw ParseError(ParseErrorKind::malformed_field, "duplicate field '" + field.key + "'", line.number,
                         field.column);
      }
    }
    std::size_t vstart = klen + 1;
    while (vstart < t.size() && t[vstart] == ' ') ++vstart;
    int value_col = line.indent + static_cast<int>(vstart) + 1;
    std::string value = t.substr(vstart);
    if (value.empty()) {
      throw ParseError(ParseErrorKind::malformed_field, "field '" + field.key + "' has no value", line.number,
                       value_col);
    }

    if (value == "quote") {
      std::vector<Line> block;
      std::size_t next = pos + 1;
      while (next < lines_.size() && lines_[next].indent > line.indent) {
        if (lines_[next].indent < line.indent + 2) {
          throw ParseError(ParseErrorKind::indentation, "indentation must be a multiple of two spaces",
                           lines_[next].number, lines_[next].indent + 1);
        }
        block.push_back(lines_[next++]);
      }
      if (block.empty()) {
        throw ParseError(ParseErrorKind::malformed_field, "quote needs an indented block", line.number, value_col);
      }
      field.raw = "quote";
      for (const auto& b : block) field.raw += "\n" + spaces(b.indent - line.indent) + b.text;
      LineParser inner(block, true);
      field.quoted = std::make_shared<const SourceNode>(inner.parse_root(line.indent + 2));
      parent.fields.push_back(std::move(field));
      pos = next;
      return;
    }

    bool negative = false;
    int depth = lex::bracket_delta(value, 0, negative);
    std::string raw = value;
    while (!negative && depth > 0) {
      if (++pos >= lines_.size()) {
        throw ParseError(ParseErrorKind::malformed_field, "unterminated expression", line.number, value_col);
      }
      const Line& cont = lines_[pos];
      if (cont.indent < line.indent) {
        throw ParseError(ParseErrorKind::indentation, "continuation line dedents past its field", cont.number,
                         cont.indent + 1);
      }
      raw += "\n" + spaces(cont.indent - line.indent) + cont.text;
      depth += lex::bracket_delta(cont.text, depth, negative);
    }
    if (negative) {
      throw ParseError(ParseErrorKind::malformed_field, "unbalanced brackets", lines_[pos].number,
                       lines_[pos].indent + 1);
    }
    ++pos;

    auto locate = [&](std::size_t off) {
      int ln = line.number;
      std::size_t last_nl = std::string::npos;
      for (std::size_t k = 0; k < off; ++k) {
        if (raw[k] == '\n') {
          ++ln;
          last_nl = k;
        }
      }
      int col = last_nl == std::string::npos ? value_col + static_cast<int>(off)
                                             : line.indent + static_cast<int>(off - last_nl);
      return std::pair{ln, col};
    };
    if (auto sp = lex::find_unquoted(raw, "$("); sp != std::string::npos) {
      auto [l, c] = locate(sp);
      throw ParseError(ParseErrorKind::malformed_splice,
                       quote_ ? "spread splice is only allowed in child position" : "splice outside a quote block",
                       l, c);
    }
    std::size_t i = 0;
    std::size_t last = 0;
    while (true) {
      auto sp = lex::find_unquoted(raw, "*(", i);
      if (sp == std::string::npos) break;
      auto [l, c] = locate(sp);
      if (!quote_) throw ParseError(ParseErrorKind::malformed_splice, "splice outside a quote block", l, c);
      auto close = lex::matching_paren(raw, sp + 1);
      if (close == std::string::npos) {
        throw ParseError(ParseErrorKind::malformed_splice, "unbalanced parentheses in splice", l, c);
      }
      if (sp > last) field.parts.emplace_back(raw.substr(last, sp - last));
      SpliceMark mark{SpliceMark::Variant::scalar_or_form,
                      std::string(lex::trim(std::string_view(raw).substr(sp + 2, close - sp - 2))), l, c};
      if (mark.expression.empty()) throw ParseError(ParseErrorKind::malformed_splice, "empty splice expression", l, c);
      field.parts.emplace_back(std::move(mark));
      last = i = close + 1;
    }
    if (last < raw.size()) field.parts.emplace_back(raw.substr(last));
    field.raw = std::move(raw);
    parent.fields.push_back(std::move(field));
  }

  std::vector<Line> lines_;
  bool quote_;
  int base_ = 0;
};

using LocationMap = std::map<std::string, std::pair<int, int>>;

std::string join_path(const std::string& prefix, const std::string& seg) {
  return prefix.empty() ? seg : prefix + "." + seg;
}

void record_locations(const SourceNode& node, const Form& form, const std::string& path, LocationMap& out) {
  out.emplace(path, std::pair{node.line, node.column});
  for (const auto& f : node.fields) {
    auto fp = join_path(path, f.key);
    out.emplace(fp, std::pair{f.line, f.column});
    if (f.quoted) {
      if (const Value* v = form.field(f.key); v && v->is<Form>()) {
        record_locations(*f.quoted, *v->get_if<Form>(), fp, out);
      }
    }
  }
  for (std::size_t i = 0; i < node.children.size() && i < form.children().size(); ++i) {
    record_locations(node.children[i], form.children()[i], join_path(path, child_segment(form, i)), out);
  }
}

void render_node(const Form& f, int indent, std::string& out);

std::string render_key(const std::string& key) { return is_identifier(key) ? key : quote_string(key); }

void render_field_value(const Value& v, int indent, std::string& out) {
  if (const auto* e = v.get_if<Expression>()) {
    const std::string& text = e->text();
    std::size_t start = 0;
    while (true) {
      auto nl = text.find('\n', start);
      if (start > 0) out += spaces(indent);
      out.append(text, start, nl == std::string::npos ? std::string::npos : nl - start);
      out += '\n';
      if (nl == std::string::npos) break;
      start = nl + 1;
    }
  } else if (const auto* inner = v.get_if<Form>()) {
    out += "quote\n";
    render_node(*inner, indent + 2, out);
  } else {
    out += render_literal(v);
    out += '\n';
  }
}

void render_node(const Form& f, int indent, std::string& out) {
  out += spaces(indent);
  out += keyword(f.kind());
  if (f.name()) {
    out += ' ';
    out += render_key(*f.name());
  }
  if (f.variant()) {
    out += ", ";
    out += render_key(f.variant()->key);
    out += ": ";
    out += render_literal(f.variant()->value);
  }
  out += '\n';
  if (f.content()) {
    const std::string& c = *f.content();
    std::size_t start = 0;
    while (true) {
      auto nl = c.find('\n', start);
      out += spaces(indent + 2);
      out += quote_string(std::string_view(c).substr(start, nl == std::string::npos ? std::string::npos : nl - start));
      out += '\n';
      if (nl == std::string::npos) break;
      start = nl + 1;
    }
  }
  for (const auto& fld : f.fields()) {
    out += spaces(indent + 2);
    out += render_key(fld.key);
    out += ": ";
    render_field_value(fld.value, indent + 2, out);
  }
  for (const auto& c : f.children()) render_node(c, indent + 2, out);
}

}  // namespace

SourceNode parse_quote(std::string_view block) {
  LineParser p(split_lines(block), true);
  return p.parse_root(0);
}

std::size_t count_splices(const SourceNode& node) {
  std::size_t n = node.splice ? 1 : 0;
  if (node.variant && node.variant->splice) ++n;
  for (const auto& f : node.fields) {
    // Splices inside a nested quote belong to that quote.
    for (const auto& part : f.parts) n += std::holds_alternative<SpliceMark>(part) ? 1 : 0;
  }
  for (const auto& c : node.children) n += count_splices(c);
  return n;
}

Form to_form(const SourceNode& node) {
  if (node.splice) throw Error(ErrorCode::invalid_form, "template still has a splice site");
  auto kind = kind_from_keyword(node.kind_word);
  if (!kind) throw Error(ErrorCode::invalid_kind, "'" + node.kind_word + "'");
  Form f(*kind, node.name);
  if (node.variant) {
    if (node.variant->splice) throw Error(ErrorCode::invalid_form, "template still has a splice site");
    auto v = scalar_literal(node.variant->literal);
    if (!v) {
      throw ParseError(ParseErrorKind::malformed_field, "variant value '" + node.variant->literal + "'", node.line,
                       node.column);
    }
    f = f.with_variant(VariantClause{node.variant->key, *v});
  }
  if (!node.content.empty()) {
    std::string c;
    for (std::size_t i = 0; i < node.content.size(); ++i) {
      if (i) c += '\n';
      c += node.content[i];
    }
    f = f.with_content(std::move(c));
  }
  std::vector<Field> fields;
  for (const auto& sf : node.fields) {
    if (sf.quoted && count_splices(*sf.quoted) == 0) {
      fields.push_back({sf.key, Value(to_form(*sf.quoted))});
      continue;
    }
    for (const auto& part : sf.parts) {
      if (std::holds_alternative<SpliceMark>(part)) {
        throw Error(ErrorCode::invalid_form, "template still has a splice site");
      }
    }
    try {
      fields.push_back({sf.key, Value::expression(sf.raw)});
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(ParseErrorKind::malformed_field, e.what(), sf.line, sf.column);
    }
  }
  f = f.with_fields(std::move(fields));
  std::vector<Form> kids;
  kids.reserve(node.children.size());
  for (const auto& c : node.children) kids.push_back(to_form(c));
  return f.with_children(std::move(kids));
}

Form parse_source(std::string_view text) {
  LineParser p(split_lines(text), false);
  SourceNode root = p.parse_root(0);
  Form form = to_form(root);
  auto violations = validate(form);
  if (!violations.empty()) {
    LocationMap locations;
    record_locations(root, form, "", locations);
    const auto& v = violations.front();
    std::pair<int, int> at{root.line, root.column};
    // Fall back to the closest recorded ancestor.
    for (std::string path = v.path;; ) {
      if (auto it = locations.find(path); it != locations.end()) {
        at = it->second;
        break;
      }
      auto dot = path.rfind('.');
      if (dot == std::string::npos) break;
      path.resize(dot);
    }
    throw ParseError(ParseErrorKind::structure, v.rule + ": " + v.detail, at.first, at.second);
  }
  return form;
}

std::string render(const Form& f) {
  std::string out;
  render_node(f, 0, out);
  return out;
}

std::string print(const Form& f) {
  for (const auto& v : validate(f)) {
    if (v.rule == "root-must-be-machine") continue;
    throw Error(ErrorCode::invalid_form, (v.path.empty() ? "<root>" : v.path) + ": " + v.rule);
  }
  return render(f);
}

std::string quote_string(std::string_view s) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out = "\"";
  for (char ch : s) {
    auto c = static_cast<unsigned char>(ch);
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20 || c == 0x7f) {
          out += "\\u00";
          out += kHex[c >> 4];
          out += kHex[c & 0xf];
        } else {
          out += ch;
        }
    }
  }
  out += '"';
  return out;
}

std::string render_literal(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Null>) {
          return "null";
        } else if constexpr (std::is_same_v<T, bool>) {
          return x ? "true" : "false";
        } else if constexpr (std::is_same_v<T, double>) {
          return format_number(x);
        } else if constexpr (std::is_same_v<T, std::string>) {
          return quote_string(x);
        } else if constexpr (std::is_same_v<T, Expression>) {
          return x.text();
        } else if constexpr (std::is_same_v<T, List>) {
          std::string out = "[";
          for (std::size_t i = 0; i < x.size(); ++i) {
            if (i) out += ", ";
            out += render_literal(x[i]);
          }
          return out + "]";
        } else if constexpr (std::is_same_v<T, Map>) {
          std::string out = "{";
          bool first = true;
          for (const auto& [k, val] : x.entries()) {
            if (!first) out += ", ";
            first = false;
            out += render_key(k);
            out += ": ";
            out += render_literal(val);
          }
          return out + "}";
        } else {
          return "form(" + hash(x) + ")";
        }
      },
      v.storage());
}

}  // namespace gmeta

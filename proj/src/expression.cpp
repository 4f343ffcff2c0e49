#include "gmeta/expression.hpp"

#include <charconv>
#include <cmath>
#include <functional>

#include "gmeta/form_ops.hpp"
#include "lex.hpp"

namespace gmeta {

std::string_view to_string(DirectiveKind kind) {
  switch (kind) {
    case DirectiveKind::materialize: return "materialize";
    case DirectiveKind::model_invoke: return "model-invoke";
    case DirectiveKind::machine_call: return "machine-call";
  }
  return "?";
}

Env& Env::bind(std::string name, Value v) {
  bindings_.insert_or_assign(std::move(name), std::move(v));
  return *this;
}

Env& Env::bind_reflect(Form f) {
  reflect_ = std::move(f);
  return *this;
}

const Value* Env::lookup(std::string_view name) const {
  auto it = bindings_.find(name);
  return it == bindings_.end() ? nullptr : &it->second;
}

namespace {

// ---------------------------------------------------------------------------
// Lexer

enum class Tok { ident, number, string, punct, end };

struct Token {
  Tok type;
  std::string text;
  std::size_t pos;
  Value literal;  // decoded number or string
};

[[noreturn]] void malformed(std::string_view text, std::size_t pos, const std::string& msg) {
  throw Error(ErrorCode::malformed_expression,
              msg + " at offset " + std::to_string(pos) + " in `" + std::string(text) + "`");
}

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (c == ' ' || c == '\n' || c == '\t' || c == '\r') {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (lex::is_ident_start(c)) {
      while (i < s.size() && lex::is_ident_char(s[i])) ++i;
      out.push_back({Tok::ident, std::string(s.substr(start, i - start)), start, {}});
    } else if (c >= '0' && c <= '9') {
      while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
      if (i + 1 < s.size() && s[i] == '.' && s[i + 1] >= '0' && s[i + 1] <= '9') {
        ++i;
        while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
      }
      if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
        if (j < s.size() && s[j] >= '0' && s[j] <= '9') {
          i = j;
          while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
        }
      }
      double d = 0;
      auto text = s.substr(start, i - start);
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), d);
      if (ec != std::errc() || !std::isfinite(d)) malformed(s, start, "bad number");
      out.push_back({Tok::number, std::string(text), start, Value(d)});
    } else if (c == '"') {
      auto lit = lex::scan_string(s, i);
      if (!lit) malformed(s, start, "unterminated string");
      i = lit->end;
      out.push_back({Tok::string, std::string(s.substr(start, i - start)), start, Value(std::move(lit->value))});
    } else {
      static constexpr std::string_view two[] = {"<=", ">=", "==", "!=", "=>"};
      std::string p(1, c);
      for (auto t : two) {
        if (s.compare(i, 2, t) == 0) p = std::string(t);
      }
      if (p.size() == 1 && std::string_view("+<>()[]{},:.-").find(c) == std::string_view::npos) {
        malformed(s, start, std::string("unexpected character '") + c + "'");
      }
      i += p.size();
      out.push_back({Tok::punct, std::move(p), start, {}});
    }
  }
  out.push_back({Tok::end, "", s.size(), {}});
  return out;
}

// ---------------------------------------------------------------------------
// Parser

ExprPtr make(auto node) { return std::make_shared<const Expr>(Expr{std::move(node)}); }

class ExprParser {
 public:
  explicit ExprParser(std::string_view text) : text_(text), toks_(tokenize(text)) {}

  ExprPtr parse_all() {
    auto e = parse_expr();
    if (peek().type != Tok::end) malformed(text_, peek().pos, "unexpected '" + peek().text + "'");
    return e;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }
  bool is_punct(std::string_view p) const { return peek().type == Tok::punct && peek().text == p; }
  bool is_word(std::string_view w) const { return peek().type == Tok::ident && peek().text == w; }
  void expect(std::string_view p) {
    if (!is_punct(p)) malformed(text_, peek().pos, "expected '" + std::string(p) + "'");
    ++pos_;
  }

  ExprPtr parse_expr() {
    auto lhs = parse_add();
    while (peek().type == Tok::punct) {
      static const std::pair<std::string_view, BinaryOp> ops[] = {
          {"<", BinaryOp::lt}, {">", BinaryOp::gt}, {"<=", BinaryOp::le},
          {">=", BinaryOp::ge}, {"==", BinaryOp::eq}, {"!=", BinaryOp::ne}};
      const BinaryOp* op = nullptr;
      for (const auto& [t, o] : ops) {
        if (peek().text == t) op = &o;
      }
      if (!op) break;
      ++pos_;
      lhs = make(expr::Binary{*op, lhs, parse_add()});
    }
    return lhs;
  }

  ExprPtr parse_add() {
    auto lhs = parse_primary();
    while (is_punct("+")) {
      ++pos_;
      lhs = make(expr::Binary{BinaryOp::add, lhs, parse_primary()});
    }
    return lhs;
  }

  std::optional<Value> literal_token() {
    const Token& t = peek();
    if (t.type == Tok::number || t.type == Tok::string) {
      ++pos_;
      return t.literal;
    }
    if (t.type == Tok::punct && t.text == "-" && toks_[pos_ + 1].type == Tok::number &&
        toks_[pos_ + 1].pos == t.pos + 1) {
      pos_ += 2;
      return Value(-*toks_[pos_ - 1].literal.get_if<double>());
    }
    if (t.type == Tok::ident) {
      if (t.text == "true") return ++pos_, Value(true);
      if (t.text == "false") return ++pos_, Value(false);
      if (t.text == "null") return ++pos_, Value(Null{});
    }
    return std::nullopt;
  }

  ExprPtr parse_primary() {
    if (auto lit = literal_token()) return make(expr::Literal{std::move(*lit)});
    const Token& t = peek();
    if (t.type == Tok::punct) {
      if (t.text == "(") {
        ++pos_;
        auto e = parse_expr();
        expect(")");
        return e;
      }
      if (t.text == "[") return parse_list();
      if (t.text == "{") return parse_map();
      malformed(text_, t.pos, "unexpected '" + t.text + "'");
    }
    if (t.type != Tok::ident) malformed(text_, t.pos, "unexpected end of expression");
    if (t.text == "match") return parse_match();
    if (t.text == "quote") malformed(text_, t.pos, "quote must start a field value");
    std::vector<std::string> path{next().text};
    while (is_punct(".")) {
      ++pos_;
      if (peek().type != Tok::ident) malformed(text_, peek().pos, "expected a name after '.'");
      path.push_back(next().text);
    }
    if (is_punct("(")) {
      std::string name = path[0];
      for (std::size_t i = 1; i < path.size(); ++i) name += "." + path[i];
      ++pos_;
      std::vector<ExprPtr> args;
      if (!is_punct(")")) {
        args.push_back(parse_expr());
        while (is_punct(",")) {
          ++pos_;
          args.push_back(parse_expr());
        }
      }
      expect(")");
      if (name == "reflect") {
        if (!args.empty()) throw Error(ErrorCode::arity_mismatch, "reflect takes no arguments");
        return make(expr::Reflect{});
      }
      return make(expr::Call{std::move(name), std::move(args)});
    }
    if (path[0] == "_") malformed(text_, t.pos, "'_' is only a match pattern");
    return make(expr::Access{path[0], std::vector<std::string>(path.begin() + 1, path.end())});
  }

  ExprPtr parse_list() {
    expect("[");
    expr::ListOf list;
    if (!is_punct("]")) {
      list.items.push_back(parse_expr());
      while (is_punct(",")) {
        ++pos_;
        list.items.push_back(parse_expr());
      }
    }
    expect("]");
    return make(std::move(list));
  }

  ExprPtr parse_map() {
    expect("{");
    expr::MapOf map;
    if (!is_punct("}")) {
      while (true) {
        const Token& k = peek();
        if (k.type != Tok::ident && k.type != Tok::string) malformed(text_, k.pos, "expected a map key");
        std::string key = k.type == Tok::string ? *k.literal.get_if<std::string>() : k.text;
        ++pos_;
        for (const auto& [existing, _] : map.entries) {
          if (existing == key) malformed(text_, k.pos, "duplicate map key '" + key + "'");
        }
        expect(":");
        map.entries.emplace_back(std::move(key), parse_expr());
        if (!is_punct(",")) break;
        ++pos_;
      }
    }
    expect("}");
    return make(std::move(map));
  }

  ExprPtr parse_match() {
    ++pos_;
    expr::Match m;
    m.scrutinee = parse_expr();
    expect("{");
    while (is_word("case")) {
      ++pos_;
      expr::Case c;
      if (is_word("_")) {
        ++pos_;
      } else if (auto lit = literal_token()) {
        c.pattern = std::move(*lit);
      } else {
        malformed(text_, peek().pos, "case pattern must be a literal or '_'");
      }
      expect("=>");
      c.body = parse_expr();
      m.cases.push_back(std::move(c));
    }
    if (m.cases.empty()) malformed(text_, peek().pos, "match needs at least one case");
    expect("}");
    return make(std::move(m));
  }

  std::string_view text_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

// Block following a leading `quote` line, dedented to column 0. nullopt when
// the text is not a quote block.
std::optional<std::string> quote_block(std::string_view t) {
  if (t.rfind("quote", 0) != 0 || t.size() < 6 || t[5] != '\n') return std::nullopt;
  std::string block;
  std::size_t start = 6;
  while (start <= t.size()) {
    auto nl = t.find('\n', start);
    auto line = t.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    if (line.size() < 2 || line.substr(0, 2) != "  ") {
      throw Error(ErrorCode::invalid_value, "quote block lines must be indented under `quote`");
    }
    block.append(line.substr(2));
    block += '\n';
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return block;
}

std::shared_ptr<const SourceNode> parse_template(const std::string& block) {
  try {
    return std::make_shared<const SourceNode>(parse_quote(block));
  } catch (const ParseError& e) {
    throw Error(ErrorCode::malformed_expression, "quote block: " + std::string(e.what()));
  }
}

// ---------------------------------------------------------------------------
// Evaluation

[[noreturn]] void type_mismatch(const std::string& msg) { throw Error(ErrorCode::type_mismatch, msg); }

Value constant_value(const Expr& e) {
  return std::visit(
      [](const auto& n) -> Value {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, expr::Literal>) {
          return n.value;
        } else if constexpr (std::is_same_v<T, expr::ListOf>) {
          List l;
          for (const auto& item : n.items) l.push_back(constant_value(*item));
          return l;
        } else if constexpr (std::is_same_v<T, expr::MapOf>) {
          Map m;
          for (const auto& [k, v] : n.entries) m.insert_or_assign(k, constant_value(*v));
          return m;
        } else {
          throw Error(ErrorCode::internal, "not a constant");
        }
      },
      e.node);
}

std::string concat_piece(const Value& v) {
  if (const auto* s = v.get_if<std::string>()) return *s;
  if (const auto* d = v.get_if<double>()) return format_number(*d);
  if (const auto* b = v.get_if<bool>()) return *b ? "true" : "false";
  type_mismatch("cannot concatenate " + std::string(v.type_name()));
}

Value eval_binary(BinaryOp op, const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) type_mismatch("null operand");
  switch (op) {
    case BinaryOp::add:
      if (a.is<std::string>() || b.is<std::string>()) return concat_piece(a) + concat_piece(b);
      if (a.is<double>() && b.is<double>()) return *a.get_if<double>() + *b.get_if<double>();
      type_mismatch("cannot add " + std::string(a.type_name()) + " and " + std::string(b.type_name()));
    case BinaryOp::eq: return a == b;
    case BinaryOp::ne: return !(a == b);
    default: break;
  }
  int cmp = 0;
  if (a.is<double>() && b.is<double>()) {
    double x = *a.get_if<double>(), y = *b.get_if<double>();
    cmp = x < y ? -1 : (x > y ? 1 : 0);
  } else if (a.is<std::string>() && b.is<std::string>()) {
    int c = a.get_if<std::string>()->compare(*b.get_if<std::string>());
    cmp = c < 0 ? -1 : (c > 0 ? 1 : 0);
  } else {
    type_mismatch("cannot compare " + std::string(a.type_name()) + " and " + std::string(b.type_name()));
  }
  switch (op) {
    case BinaryOp::lt: return cmp < 0;
    case BinaryOp::gt: return cmp > 0;
    case BinaryOp::le: return cmp <= 0;
    case BinaryOp::ge: return cmp >= 0;
    default: return false;
  }
}

Value eval_access(const expr::Access& a, const Env& env) {
  const Value* base = env.lookup(a.base);
  if (!base) throw Error(ErrorCode::unbound_identifier, a.base);
  Value cur = *base;
  std::string where = a.base;
  for (const auto& seg : a.tail) {
    where += "." + seg;
    if (const auto* m = cur.get_if<Map>()) {
      const Value* v = m->find(seg);
      if (!v) throw Error(ErrorCode::unbound_identifier, where);
      cur = *v;
    } else if (const auto* f = cur.get_if<Form>()) {
      auto v = get(*f, seg);
      if (!v) throw Error(ErrorCode::unbound_identifier, where);
      cur = std::move(*v);
    } else {
      type_mismatch("cannot access '" + seg + "' on " + std::string(cur.type_name()));
    }
  }
  return cur;
}

Value eval_node(const Expr& e, const Env& env, DirectiveLog& log);

Value eval_reflect(const Env& env) {
  if (!env.reflect_constant()) throw Error(ErrorCode::unbound_identifier, "reflect(): no enclosing machine");
  return *env.reflect_constant();
}

Value eval_node(const Expr& e, const Env& env, DirectiveLog& log) {
  return std::visit(
      [&](const auto& n) -> Value {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, expr::Literal>) {
          return n.value;
        } else if constexpr (std::is_same_v<T, expr::Binary>) {
          Value a = eval_node(*n.lhs, env, log);
          Value b = eval_node(*n.rhs, env, log);
          return eval_binary(n.op, a, b);
        } else if constexpr (std::is_same_v<T, expr::Access>) {
          return eval_access(n, env);
        } else if constexpr (std::is_same_v<T, expr::Match>) {
          Value s = eval_node(*n.scrutinee, env, log);
          for (const auto& c : n.cases) {
            if (!c.pattern || *c.pattern == s) return eval_node(*c.body, env, log);
          }
          throw Error(ErrorCode::no_case_matched, render_literal(s));
        } else if constexpr (std::is_same_v<T, expr::Call>) {
          std::vector<Value> args;
          args.reserve(n.args.size());
          for (const auto& a : n.args) args.push_back(eval_node(*a, env, log));
          return call_builtin(n.name, args, log);
        } else if constexpr (std::is_same_v<T, expr::ListOf>) {
          List l;
          for (const auto& item : n.items) l.push_back(eval_node(*item, env, log));
          return l;
        } else if constexpr (std::is_same_v<T, expr::MapOf>) {
          Map m;
          for (const auto& [k, v] : n.entries) m.insert_or_assign(k, eval_node(*v, env, log));
          return m;
        } else if constexpr (std::is_same_v<T, expr::Quote>) {
          return instantiate_quote(*n.tmpl, env, log);
        } else {
          return eval_reflect(env);
        }
      },
      e.node);
}

Value eval_splice(const SpliceMark& mark, const Env& env, DirectiveLog& log) {
  return eval_node(*parse_expression(mark.expression), env, log);
}

// ---------------------------------------------------------------------------
// Builtins

const Form& arg_form(std::string_view fn, const Value& v) {
  if (const auto* f = v.get_if<Form>()) return *f;
  type_mismatch(std::string(fn) + ": expected form, got " + std::string(v.type_name()));
}

const std::string& arg_string(std::string_view fn, const Value& v) {
  if (const auto* s = v.get_if<std::string>()) return *s;
  type_mismatch(std::string(fn) + ": expected string, got " + std::string(v.type_name()));
}

Value optional_value(std::optional<Value> v) { return v ? std::move(*v) : Value(Null{}); }
Value optional_form(std::optional<Form> f) { return f ? Value(std::move(*f)) : Value(Null{}); }

List form_list(const std::vector<Form>& forms) { return List(forms.begin(), forms.end()); }

Kind arg_kind(std::string_view fn, const Value& v) {
  const auto& word = arg_string(fn, v);
  auto k = kind_from_keyword(word);
  if (!k) throw Error(ErrorCode::invalid_kind, "'" + word + "'");
  return *k;
}

Map diff_entry_map(const DiffEntry& d) {
  Map m{{"path", d.path}, {"op", std::string(to_string(d.op))}, {"target", std::string(to_string(d.target))}};
  if (d.before) m.insert_or_assign("before", *d.before);
  if (d.after) m.insert_or_assign("after", *d.after);
  if (d.index) m.insert_or_assign("index", static_cast<double>(*d.index));
  return m;
}

struct Builtin {
  std::size_t min_args;
  std::size_t max_args;
  std::function<Value(std::span<const Value>)> fn;
};

const std::map<std::string, Builtin, std::less<>>& builtins() {
  static const std::map<std::string, Builtin, std::less<>> table = [] {
    std::map<std::string, Builtin, std::less<>> t;
    t["form.kind"] = {1, 1, [](auto a) { return Value(std::string(keyword(arg_form("form.kind", a[0]).kind()))); }};
    t["form.name"] = {1, 1, [](auto a) {
                        const auto& n = arg_form("form.name", a[0]).name();
                        return n ? Value(*n) : Value(Null{});
                      }};
    t["form.children"] = {1, 1, [](auto a) { return Value(form_list(arg_form("form.children", a[0]).children())); }};
    t["form.section"] = {2, 2, [](auto a) {
                           return optional_form(section(arg_form("form.section", a[0]), arg_kind("form.section", a[1])));
                         }};
    t["form.step"] = {2, 2, [](auto a) {
                        return optional_form(step(arg_form("form.step", a[0]), arg_string("form.step", a[1])));
                      }};
    t["form.steps"] = {1, 1, [](auto a) { return Value(form_list(steps(arg_form("form.steps", a[0])))); }};
    t["form.count_steps"] = {1, 1, [](auto a) {
                               return Value(static_cast<double>(count_steps(arg_form("form.count_steps", a[0]))));
                             }};
    t["form.step_types"] = {1, 1, [](auto a) {
                              Map m;
                              for (const auto& [k, n] : step_types(arg_form("form.step_types", a[0]))) {
                                m.insert_or_assign(std::string(keyword(k)), static_cast<double>(n));
                              }
                              return Value(std::move(m));
                            }};
    t["form.get"] = {2, 2, [](auto a) {
                       return optional_value(get(arg_form("form.get", a[0]), arg_string("form.get", a[1])));
                     }};
    t["form.set"] = {3, 3, [](auto a) { return Value(set(arg_form("form.set", a[0]), arg_string("form.set", a[1]), a[2])); }};
    t["form.add"] = {3, 3, [](auto a) {
                       return Value(add_child(arg_form("form.add", a[0]), arg_string("form.add", a[1]),
                                              arg_form("form.add", a[2])));
                     }};
    t["form.remove"] = {2, 2, [](auto a) {
                          return Value(remove_child(arg_form("form.remove", a[0]), arg_string("form.remove", a[1])));
                        }};
    t["form.replace"] = {3, 3, [](auto a) {
                           return Value(replace_child(arg_form("form.replace", a[0]), arg_string("form.replace", a[1]),
                                                      arg_form("form.replace", a[2])));
                         }};
    t["form.merge"] = {2, 2, [](auto a) {
                         return Value(merge(arg_form("form.merge", a[0]), arg_form("form.merge", a[1])));
                       }};
    t["form.diff"] = {2, 2, [](auto a) {
                        List out;
                        for (const auto& d : diff(arg_form("form.diff", a[0]), arg_form("form.diff", a[1])).entries) {
                          out.push_back(diff_entry_map(d));
                        }
                        return Value(std::move(out));
                      }};
    t["form.validate"] = {1, 1, [](auto a) {
                            List out;
                            for (const auto& v : validate(arg_form("form.validate", a[0]))) {
                              out.push_back(Map{{"path", v.path}, {"rule", v.rule}, {"detail", v.detail}});
                            }
                            return Value(std::move(out));
                          }};
    t["form.hash"] = {1, 1, [](auto a) { return Value(hash(arg_form("form.hash", a[0]))); }};
    t["form.capabilities"] = {1, 1, [](auto a) {
                                List out;
                                for (const auto& c : capabilities(arg_form("form.capabilities", a[0]))) {
                                  out.push_back(c.str());
                                }
                                return Value(std::move(out));
                              }};
    t["form.to_text"] = {1, 1, [](auto a) { return Value(to_text(arg_form("form.to_text", a[0]))); }};
    t["form.from_text"] = {1, 1, [](auto a) { return Value(from_text(arg_string("form.from_text", a[0]))); }};
    t["form.to_json"] = {1, 1, [](auto a) { return Value(to_json(arg_form("form.to_json", a[0]))); }};
    t["form.from_json"] = {1, 1, [](auto a) { return Value(from_json(arg_string("form.from_json", a[0]))); }};
    t["form.new"] = {1, 2, [](auto a) {
                       std::optional<std::string> name;
                       if (a.size() == 2 && !a[1].is_null()) name = arg_string("form.new", a[1]);
                       return Value(new_form(arg_string("form.new", a[0]), std::move(name)));
                     }};
    return t;
  }();
  return table;
}

bool has_trailing_space(std::string_view line) {
  return !line.empty() && (line.back() == ' ' || line.back() == '\t');
}

}  // namespace

ExprPtr parse_expression(std::string_view text) {
  auto t = lex::trim(text);
  if (auto block = quote_block(t)) return make(expr::Quote{parse_template(*block)});
  if (t.empty()) throw Error(ErrorCode::malformed_expression, "empty expression");
  return ExprParser(t).parse_all();
}

bool is_constant(const Expr& e) {
  return std::visit(
      [](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, expr::Literal>) {
          return true;
        } else if constexpr (std::is_same_v<T, expr::ListOf>) {
          for (const auto& item : n.items) {
            if (!is_constant(*item)) return false;
          }
          return true;
        } else if constexpr (std::is_same_v<T, expr::MapOf>) {
          for (const auto& [k, v] : n.entries) {
            if (!is_constant(*v)) return false;
          }
          return true;
        } else {
          return false;
        }
      },
      e.node);
}

Value eval(const Expr& e, const Env& env, DirectiveLog& log) {
  const std::size_t before = log.size();
  Value v = eval_node(e, env, log);
  if (log.size() != before) throw Error(ErrorCode::internal, "pure evaluation appended to the directive log");
  return v;
}

Value eval_field(const Value& v, const Env& env, DirectiveLog& log) {
  if (const auto* e = v.get_if<Expression>()) return eval(*parse_expression(e->text()), env, log);
  return v;
}

Form instantiate_quote(const SourceNode& tmpl, const Env& env, DirectiveLog& log) {
  const std::size_t before = log.size();
  auto kind = kind_from_keyword(tmpl.kind_word);
  if (!kind) throw Error(ErrorCode::invalid_kind, "'" + tmpl.kind_word + "'");
  Form f(*kind, tmpl.name);
  if (tmpl.variant) {
    Value v;
    if (tmpl.variant->splice) {
      v = eval_splice(*tmpl.variant->splice, env, log);
      if (!v.is_scalar()) {
        throw Error(ErrorCode::splice_type_mismatch, "variant splice yielded " + std::string(v.type_name()));
      }
    } else {
      v = Value::expression(tmpl.variant->literal);
    }
    f = f.with_variant(VariantClause{tmpl.variant->key, std::move(v)});
  }
  if (!tmpl.content.empty()) {
    std::string c;
    for (std::size_t i = 0; i < tmpl.content.size(); ++i) {
      if (i) c += '\n';
      c += tmpl.content[i];
    }
    f = f.with_content(std::move(c));
  }
  std::vector<Field> fields;
  for (const auto& sf : tmpl.fields) {
    if (sf.quoted) {
      fields.push_back({sf.key, Value::expression(sf.raw)});
      continue;
    }
    if (sf.parts.size() == 1 && std::holds_alternative<SpliceMark>(sf.parts[0])) {
      fields.push_back({sf.key, eval_splice(std::get<SpliceMark>(sf.parts[0]), env, log)});
      continue;
    }
    std::string text;
    for (const auto& part : sf.parts) {
      if (const auto* s = std::get_if<std::string>(&part)) {
        text += *s;
        continue;
      }
      Value v = eval_splice(std::get<SpliceMark>(part), env, log);
      if (v.is<Form>()) {
        throw Error(ErrorCode::splice_type_mismatch, "form spliced inside the text of field '" + sf.key + "'");
      }
      text += render_literal(v);
    }
    fields.push_back({sf.key, Value::expression(text)});
  }
  f = f.with_fields(std::move(fields));
  std::vector<Form> kids;
  for (const auto& c : tmpl.children) {
    if (!c.splice) {
      kids.push_back(instantiate_quote(c, env, log));
      continue;
    }
    Value v = eval_splice(*c.splice, env, log);
    if (c.splice->variant == SpliceMark::Variant::spread) {
      const auto* list = v.get_if<List>();
      if (!list) throw Error(ErrorCode::splice_type_mismatch, "spread splice yielded " + std::string(v.type_name()));
      for (const auto& item : *list) {
        const auto* child = item.get_if<Form>();
        if (!child) {
          throw Error(ErrorCode::splice_type_mismatch, "spread list holds " + std::string(item.type_name()));
        }
        kids.push_back(*child);
      }
    } else {
      const auto* child = v.get_if<Form>();
      if (!child) {
        throw Error(ErrorCode::splice_type_mismatch, "child splice yielded " + std::string(v.type_name()));
      }
      kids.push_back(*child);
    }
  }
  if (log.size() != before) throw Error(ErrorCode::internal, "quote instantiation appended to the directive log");
  return f.with_children(std::move(kids));
}

Value call_builtin(std::string_view name, std::span<const Value> args, DirectiveLog& log) {
  const auto& table = builtins();
  auto it = table.find(name);
  if (it == table.end()) throw Error(ErrorCode::unknown_builtin, std::string(name));
  const Builtin& b = it->second;
  if (args.size() < b.min_args || args.size() > b.max_args) {
    throw Error(ErrorCode::arity_mismatch, std::string(name) + " takes " + std::to_string(b.min_args) +
                                               (b.max_args != b.min_args ? "-" + std::to_string(b.max_args) : "") +
                                               " arguments, got " + std::to_string(args.size()));
  }
  const std::size_t before = log.size();
  Value v = b.fn(args);
  if (log.size() != before) throw Error(ErrorCode::internal, "builtin appended to the directive log");
  return v;
}

bool is_builtin(std::string_view name) { return builtins().count(name) > 0; }

std::vector<std::string> builtin_names() {
  std::vector<std::string> out;
  for (const auto& [k, _] : builtins()) out.push_back(k);
  return out;
}

Value Value::expression(std::string_view text) {
  auto t = lex::trim(text);
  if (t.empty()) throw Error(ErrorCode::invalid_value, "empty expression text");
  if (auto block = quote_block(t)) {
    SourceNode node;
    try {
      node = parse_quote(*block);
    } catch (const ParseError& e) {
      throw Error(ErrorCode::invalid_value, "quote block: " + std::string(e.what()));
    }
    if (count_splices(node) == 0) return Value(to_form(node));
    Value v;
    v.v_ = Expression(std::string(t));
    return v;
  }
  if (lex::find_unquoted(t, "#") != std::string_view::npos) {
    throw Error(ErrorCode::invalid_value, "expression text contains '#'");
  }
  if (lex::find_unquoted(t, "*(") != std::string_view::npos || lex::find_unquoted(t, "$(") != std::string_view::npos) {
    throw Error(ErrorCode::invalid_value, "splice outside a quote block");
  }
  // Every line but the last must leave a bracket open so the text re-reads
  // as one field.
  int depth = 0;
  bool negative = false;
  std::size_t start = 0;
  while (true) {
    auto nl = t.find('\n', start);
    auto line = t.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    if (start > 0 && lex::trim(line).empty()) throw Error(ErrorCode::invalid_value, "blank continuation line");
    if (has_trailing_space(line) || line.find('\r') != std::string_view::npos ||
        line.find('\t') != std::string_view::npos) {
      throw Error(ErrorCode::invalid_value, "expression text has stray whitespace");
    }
    depth += lex::bracket_delta(line, depth, negative);
    if (nl == std::string_view::npos) break;
    if (depth <= 0) throw Error(ErrorCode::invalid_value, "multi-line expression closes before its last line");
    start = nl + 1;
  }
  if (negative || depth != 0) throw Error(ErrorCode::invalid_value, "unbalanced brackets");
  Value v;
  try {
    auto e = ExprParser(t).parse_all();
    if (is_constant(*e)) return constant_value(*e);
  } catch (const Error&) {
  }
  v.v_ = Expression(std::string(t));
  return v;
}

}  // namespace gmeta

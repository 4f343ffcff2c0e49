#include "gen.hpp"

#include <cmath>
#include <set>

#include "gmeta/form_ops.hpp"

namespace gmeta_test {

using gmeta::Form;
using gmeta::Kind;
using gmeta::List;
using gmeta::Map;
using gmeta::Value;

namespace {

const std::set<std::string>& reserved() {
  static const std::set<std::string> words = [] {
    std::set<std::string> s{"true", "false", "null", "quote", "match", "case", "form", "input",
                            "reflect", "name", "kind", "content", "variant_key", "variant_value"};
    for (Kind k : gmeta::all_kinds()) s.insert(std::string(gmeta::keyword(k)));
    return s;
  }();
  return words;
}

const std::vector<std::string>& expression_pool() {
  static const std::vector<std::string> pool{
      "input.a + 1",
      "\"Hello, \" + input.name",
      "input.a < 3",
      "input.a >= input.b",
      "input.a == input.b",
      "input.a != \"x\"",
      "match input.flag { case true => 1 case _ => 2 }",
      "match input.a < 0.7 { case true => \"low\" case false => \"high\" }",
      "form.kind(reflect())",
      "form.count_steps(reflect())",
      "form.hash(reflect())",
      "reflect()",
      "[input.a, 2, \"three\"]",
      "{k: input.a, j: [1, 2]}",
      "input.a + input.b + 1",
      "form.get(reflect(), \"name\")",
      "form.capabilities(reflect())",
      "quote\n  machine t\n    implements\n      compute c\n        v: *(input.a)",
      "quote\n  machine t\n    implements\n      compute c\n        v: 1\n      $(...input.steps)",
  };
  return pool;
}

}  // namespace

const std::vector<std::string>& model_pool() {
  static const std::vector<std::string> pool{"claude-sonnet-4-6", "claude-opus-4-6", "model-a", "model-b"};
  return pool;
}

const std::vector<std::string>& call_pool() {
  static const std::vector<std::string> pool{"@system/evolution/propose", "@system/runtime/eval",
                                             "@team/summarize"};
  return pool;
}

int Gen::below(int n) { return n <= 1 ? 0 : static_cast<int>(rng_() % static_cast<std::uint64_t>(n)); }

bool Gen::coin(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p; }

std::string Gen::ident() {
  static const std::string head = "abcdefghijklmnopqrstuvwxyz_";
  static const std::string tail = "abcdefghijklmnopqrstuvwxyz_0123456789";
  for (;;) {
    std::string s(1, head[static_cast<std::size_t>(below(static_cast<int>(head.size())))]);
    int len = below(8);
    for (int i = 0; i < len; ++i) s += tail[static_cast<std::size_t>(below(static_cast<int>(tail.size())))];
    if (!reserved().count(s)) return s;
  }
}

std::string Gen::text() {
  static const std::vector<std::string> atoms{"a", "b", "Z", " ", "0", "\"", "\\", "\n", "\t", "é", "→", "*(", "$(", "#",
                                              ":", ",", "{", "]", "\x01", "quote"};
  std::string s;
  int len = below(9);
  for (int i = 0; i < len; ++i) s += pick(atoms);
  return s;
}

double Gen::number() {
  switch (below(5)) {
    case 0: return below(2001) - 1000;
    case 1: return std::ldexp(static_cast<double>(below(1 << 20)), -below(30));
    case 2: return -std::uniform_real_distribution<double>(0.0, 1e6)(rng_);
    case 3: return std::uniform_real_distribution<double>(-1.0, 1.0)(rng_) * std::pow(10.0, below(40) - 20);
    default: return 0.5;
  }
}

Value Gen::scalar() {
  switch (below(4)) {
    case 0: return gmeta::Null{};
    case 1: return coin();
    case 2: return number();
    default: return text();
  }
}

Value Gen::literal(int depth) {
  if (depth <= 0 || coin(0.6)) return scalar();
  if (coin()) {
    List l;
    int n = below(4);
    for (int i = 0; i < n; ++i) l.push_back(literal(depth - 1));
    return l;
  }
  Map m;
  int n = below(4);
  for (int i = 0; i < n; ++i) {
    std::string key = coin(0.8) ? ident() : (coin() ? "$" + ident() : text());
    m.insert_or_assign(std::move(key), literal(depth - 1));
  }
  return m;
}

Value Gen::expression() { return Value::expression(pick(expression_pool())); }

Form Gen::config(Kind k) {
  Form f(k);
  if (k == Kind::task) {
    std::string content = text();
    for (int extra = below(3); extra > 0; --extra) content += "\n" + text();
    return f.with_content(content);
  }
  int n = below(4);
  for (int i = 0; i < n; ++i) {
    Value v = k == Kind::returns ? Value(Value::expression(pick(std::vector<std::string>{"text", "number", "boolean"})))
                                 : literal(2);
    f = f.with_field(ident(), std::move(v));
  }
  return f;
}

Form Gen::step(int depth) {
  if (coin(0.55)) {
    Form f(Kind::compute, ident());
    int n = 1 + below(3);
    for (int i = 0; i < n; ++i) {
      Value v;
      int roll = below(10);
      if (roll < 4) {
        v = literal(2);
      } else if (roll < 8 || depth < 2) {
        v = expression();
      } else {
        v = machine(std::min(depth, 3));
      }
      f = f.with_field(ident(), std::move(v));
    }
    return f;
  }
  bool model = coin(0.6);
  Form f(Kind::ask, ident());
  f = f.with_variant(gmeta::VariantClause{model ? "using" : "from", model ? pick(model_pool()) : pick(call_pool())});
  if (depth >= 2) {
    if (model || coin(0.3)) f = f.with_child(config(Kind::task));
    if (model) f = f.with_child(config(Kind::returns));
    if (coin(0.2)) f = f.with_child(config(Kind::evidence));
  }
  if (!model) {
    f = f.with_field("definition", coin() ? Value(gmeta::Null{}) : expression());
    if (coin()) f = f.with_field("evidence", literal(2));
  }
  return f;
}

Form Gen::section(Kind k, int depth) {
  Form f(k);
  if (depth <= 1) return k == Kind::implements || k == Kind::provides || k == Kind::requires_ || k == Kind::governance ||
                                 k == Kind::tests
                             ? f
                             : f.with_field(ident(), literal(1));
  switch (k) {
    case Kind::provides:
    case Kind::requires_:
      if (coin(0.8)) {
        Form in(Kind::inputs);
        for (int n = below(4); n > 0; --n) {
          in = in.with_field(ident(), Value::expression(coin() ? "text, required" : "number"));
        }
        f = f.with_child(in);
      }
      if (coin(0.4)) f = f.with_child(config(Kind::outputs));
      return f;
    case Kind::implements: {
      std::set<std::string> names;
      for (int n = below(5); n > 0; --n) {
        Form s = step(depth - 2);
        if (names.insert(*s.name()).second) f = f.with_child(s);
      }
      return f;
    }
    case Kind::governance:
      for (Kind c : {Kind::policies, Kind::limits, Kind::models}) {
        if (coin(0.5)) f = f.with_child(config(c));
      }
      return f;
    case Kind::tests:
      for (int n = below(3); n > 0; --n) {
        Form t(Kind::test);
        if (coin()) t = t.with_content(text());
        if (depth >= 3) t = t.with_child(config(Kind::expect));
        f = f.with_child(t);
      }
      return f;
    default:
      for (int n = below(4); n > 0; --n) f = f.with_field(ident(), literal(2));
      return f;
  }
}

Form Gen::machine(int depth) {
  Form m(Kind::machine, ident());
  if (depth <= 1) return m;
  static const std::vector<Kind> sections{Kind::provides, Kind::requires_, Kind::implements, Kind::governance,
                                          Kind::state,    Kind::constants, Kind::tests,      Kind::metadata};
  for (Kind k : sections) {
    double p = k == Kind::implements ? 0.85 : 0.3;
    if (coin(p)) m = m.with_child(section(k, depth - 1));
  }
  return m;
}

Form Gen::wild(int depth) {
  Form m = machine(depth);
  switch (below(7)) {
    case 0: return m;
    case 1: return Form(Kind::compute, ident()).with_child(Form(Kind::implements));
    case 2: return gmeta::new_form(Kind::machine, ident()).with_child(Form(Kind::implements).with_child(m));
    case 3: {
      Form bad(Kind::ask, ident());
      return m.with_child(Form(Kind::implements).with_child(bad));
    }
    case 4: {
      Form s(Kind::compute, "dup");
      return m.with_child(Form(Kind::implements).with_child(s).with_child(s));
    }
    case 5: return m.with_child(Form(Kind::inputs));
    default: return m.with_child(Form(Kind::provides).with_child(Form(Kind::task).with_content("x")));
  }
}

gmeta::PolicyContext Gen::policy() {
  gmeta::PolicyContext pi;
  if (coin(0.35)) {
    pi.allowed_caps = {"model:*", "call:*"};
    pi.allowed_models = {"*"};
    pi.default_model_cost = below(3);
    pi.compute_step_cost = below(2);
    pi.budget = 200 + below(200);
    pi.min_trust = static_cast<gmeta::TrustLevel>(below(2));
    return pi;
  }
  static const std::vector<std::string> caps{"model:*", "call:*", "call:@system/*", "model:claude-sonnet-4-6",
                                             "call:@system/evolution/propose", "model:model-a"};
  for (const auto& c : caps) {
    if (coin(0.4)) pi.allowed_caps.push_back(c);
  }
  if (coin(0.3)) {
    pi.allowed_models = {"*"};
  } else {
    for (const auto& mdl : model_pool()) {
      if (coin(0.5)) pi.allowed_models.push_back(mdl);
    }
  }
  pi.require_governance_section = coin(0.2);
  if (coin(0.3)) pi.max_steps = below(6);
  if (coin(0.2)) pi.required_fields.emplace_back("compute", ident());
  if (coin(0.3)) pi.model_costs["claude-opus-4-6"] = below(50);
  pi.default_model_cost = below(20);
  pi.compute_step_cost = below(3);
  pi.budget = below(120);
  pi.min_trust = trust();
  return pi;
}

gmeta::TrustLevel Gen::trust() { return static_cast<gmeta::TrustLevel>(below(4)); }

gmeta::Mode Gen::mode() { return static_cast<gmeta::Mode>(below(3)); }

namespace {

void collect_paths(const Form& f, const std::string& prefix, std::vector<std::string>& out, bool children_only) {
  auto join = [&](const std::string& seg) { return prefix.empty() ? seg : prefix + "." + seg; };
  if (!children_only) {
    out.push_back(join("kind"));
    if (f.name()) out.push_back(join("name"));
    if (f.variant()) {
      out.push_back(join("variant_key"));
      out.push_back(join("variant_value"));
    }
    if (f.content()) out.push_back(join("content"));
    for (const auto& fld : f.fields()) out.push_back(join(fld.key));
  }
  for (std::size_t i = 0; i < f.children().size(); ++i) {
    std::string cp = join(gmeta::child_segment(f, i));
    out.push_back(cp);
    collect_paths(f.children()[i], cp, out, children_only);
  }
}

}  // namespace

std::vector<std::string> Gen::paths(const Form& f) {
  std::vector<std::string> out;
  collect_paths(f, "", out, false);
  return out;
}

std::vector<std::string> Gen::child_paths(const Form& f) {
  std::vector<std::string> out;
  collect_paths(f, "", out, true);
  return out;
}

}  // namespace gmeta_test

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gmeta/directive.hpp"
#include "gmeta/form.hpp"
#include "gmeta/parser.hpp"

namespace gmeta {

/// Bindings visible to an expression: step results, `input`, and the
/// reflect constant when the machine has one.
class Env {
 public:
  Env& bind(std::string name, Value v);
  Env& bind_reflect(Form f);

  const Value* lookup(std::string_view name) const;
  const std::optional<Form>& reflect_constant() const { return reflect_; }

 private:
  std::map<std::string, Value, std::less<>> bindings_;
  std::optional<Form> reflect_;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class BinaryOp { add, lt, gt, le, ge, eq, ne };

namespace expr {

struct Literal {
  Value value;
};
struct Binary {
  BinaryOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};
/// `base.tail[0].tail[1]...`
struct Access {
  std::string base;
  std::vector<std::string> tail;
};
struct Case {
  std::optional<Value> pattern;  // nullopt is the `_` wildcard
  ExprPtr body;
};
struct Match {
  ExprPtr scrutinee;
  std::vector<Case> cases;
};
struct Call {
  std::string name;
  std::vector<ExprPtr> args;
};
struct ListOf {
  std::vector<ExprPtr> items;
};
struct MapOf {
  std::vector<std::pair<std::string, ExprPtr>> entries;
};
struct Quote {
  std::shared_ptr<const SourceNode> tmpl;
};
struct Reflect {};

}  // namespace expr

struct Expr {
  std::variant<expr::Literal, expr::Binary, expr::Access, expr::Match, expr::Call, expr::ListOf,
               expr::MapOf, expr::Quote, expr::Reflect>
      node;
};

/// Throws malformed-expression.
ExprPtr parse_expression(std::string_view text);

/// True when e is built only from literals, lists and maps.
bool is_constant(const Expr& e);

/// Pure evaluation. Never appends to `log`; the size is checked on exit.
Value eval(const Expr& e, const Env& env, DirectiveLog& log);

/// Evaluates a stored field value: expressions are parsed and evaluated,
/// everything else is returned unchanged.
Value eval_field(const Value& v, const Env& env, DirectiveLog& log);

Form instantiate_quote(const SourceNode& tmpl, const Env& env, DirectiveLog& log);

Value call_builtin(std::string_view name, std::span<const Value> args, DirectiveLog& log);
bool is_builtin(std::string_view name);
std::vector<std::string> builtin_names();

}  // namespace gmeta

#pragma once

#include <compare>
#include <cstddef>
#include <initializer_list>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "gmeta/kind.hpp"

namespace gmeta {

class Value;
struct Field;
struct VariantClause;

struct Null {
  bool operator==(const Null&) const = default;
};

using List = std::vector<Value>;

/// String-keyed association. Keys are unique and kept sorted, so two maps
/// with the same entries compare (and print) identically.
class Map {
 public:
  using Entry = std::pair<std::string, Value>;

  Map() = default;
  Map(std::initializer_list<Entry> entries);

  const Value* find(std::string_view key) const;
  void insert_or_assign(std::string key, Value value);
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  bool operator==(const Map& other) const;

 private:
  std::vector<Entry> entries_;
};

/// Unevaluated expression text held in a field. Only constructed through
/// Value::expression, which folds constant texts into plain literals.
class Expression {
 public:
  const std::string& text() const { return text_; }
  bool operator==(const Expression&) const = default;

 private:
  explicit Expression(std::string text) : text_(std::move(text)) {}
  std::string text_;
  friend class Value;
};

/// Immutable program-structure tree: kind, optional name, optional variant
/// clause, optional inline content, ordered fields and ordered children.
/// Copies share storage; every with_* call returns a new value.
class Form {
 public:
  explicit Form(Kind kind, std::optional<std::string> name = std::nullopt);

  Kind kind() const;
  const std::optional<std::string>& name() const;
  const std::optional<VariantClause>& variant() const;
  const std::optional<std::string>& content() const;
  const std::vector<Field>& fields() const;
  const std::vector<Form>& children() const;

  const Value* field(std::string_view key) const;

  Form with_kind(Kind kind) const;
  Form with_name(std::optional<std::string> name) const;
  Form with_variant(std::optional<VariantClause> variant) const;
  Form with_content(std::optional<std::string> content) const;
  /// Replaces the value in place when `key` exists, appends otherwise.
  Form with_field(std::string key, Value value) const;
  Form with_field_at(std::size_t index, std::string key, Value value) const;
  Form without_field(std::string_view key) const;
  /// Throws invalid-value on duplicate keys.
  Form with_fields(std::vector<Field> fields) const;
  Form with_child(Form child) const;
  Form with_children(std::vector<Form> children) const;

  bool operator==(const Form& other) const;

 private:
  struct Data;
  explicit Form(std::shared_ptr<const Data> data) : data_(std::move(data)) {}
  std::shared_ptr<Data> clone() const;

  std::shared_ptr<const Data> data_;
};

class Value {
 public:
  using Storage = std::variant<Null, bool, double, std::string, Expression, List, Map, Form>;

  Value() = default;
  Value(Null) {}
  Value(bool b) : v_(b) {}
  Value(int n) : v_(static_cast<double>(n)) {}
  Value(double d);
  Value(std::string s) : v_(std::move(s)) {}
  Value(const char* s) : v_(std::string(s)) {}
  Value(List l) : v_(std::move(l)) {}
  Value(Map m) : v_(std::move(m)) {}
  Value(Form f) : v_(std::move(f)) {}

  /// Field-value factory for raw expression text. Trims the text, folds
  /// constant literals (strings, numbers, booleans, null, lists and maps of
  /// those) and splice-free quote blocks into plain values, and keeps
  /// everything else as an Expression. Throws invalid-value when the text
  /// could not be printed and re-read unchanged.
  static Value expression(std::string_view text);

  const Storage& storage() const { return v_; }

  template <typename T>
  bool is() const {
    return std::holds_alternative<T>(v_);
  }
  template <typename T>
  const T* get_if() const {
    return std::get_if<T>(&v_);
  }
  bool is_null() const { return is<Null>(); }
  bool is_scalar() const { return is<Null>() || is<bool>() || is<double>() || is<std::string>(); }

  std::string_view type_name() const;

  bool operator==(const Value& other) const { return v_ == other.v_; }

 private:
  Storage v_;
};

struct Field {
  std::string key;
  Value value;
  bool operator==(const Field&) const = default;
};

/// `ask classify, using: "model"` carries the clause (using, "model").
struct VariantClause {
  std::string key;
  Value value;
  bool operator==(const VariantClause&) const = default;
};

struct CapabilityAtom {
  enum class Class { model, call };

  Class cls;
  std::string target;

  /// "model:<name>" or "call:<address>".
  std::string str() const;
  static CapabilityAtom parse(std::string_view text);

  auto operator<=>(const CapabilityAtom&) const = default;
};

using CapSet = std::set<CapabilityAtom>;

enum class DiffOp { added, removed, modified };

/// What a diff path points at: an attribute terminal, a field, a child form,
/// or (for reorderings and kind changes) the whole form at that path.
enum class DiffTarget { attribute, field, child, form };

struct DiffEntry {
  std::string path;
  DiffOp op;
  DiffTarget target;
  std::optional<Value> before;
  std::optional<Value> after;
  /// Insertion position within the parent, set on additions only.
  std::optional<std::size_t> index;

  bool operator==(const DiffEntry&) const = default;
};

struct FormDiff {
  std::vector<DiffEntry> entries;
  bool empty() const { return entries.empty(); }
  bool operator==(const FormDiff&) const = default;
};

struct Violation {
  std::string path;
  std::string rule;
  std::string detail;
};

std::string_view to_string(DiffOp op);
std::string_view to_string(DiffTarget target);

/// Shortest round-trip decimal text; integral values print without a point.
std::string format_number(double d);

bool is_identifier(std::string_view s);

}  // namespace gmeta

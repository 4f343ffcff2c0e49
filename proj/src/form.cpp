#include "gmeta/form.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "gmeta/error.hpp"

namespace gmeta {

// Map

Map::Map(std::initializer_list<Entry> entries) {
  for (const auto& e : entries) insert_or_assign(e.first, e.second);
}

const Value* Map::find(std::string_view key) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), key,
                             [](const Entry& e, std::string_view k) { return e.first < k; });
  if (it == entries_.end() || it->first != key) return nullptr;
  return &it->second;
}

void Map::insert_or_assign(std::string key, Value value) {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), key,
                             [](const Entry& e, const std::string& k) { return e.first < k; });
  if (it != entries_.end() && it->first == key) {
    it->second = std::move(value);
  } else {
    entries_.emplace(it, std::move(key), std::move(value));
  }
}

bool Map::operator==(const Map& other) const { return entries_ == other.entries_; }

// Value

Value::Value(double d) : v_(d) {
  if (!std::isfinite(d)) throw Error(ErrorCode::invalid_value, "non-finite number");
  if (d == 0.0) v_ = 0.0;  // fold -0
}

std::string_view Value::type_name() const {
  return std::visit(
      [](const auto& x) -> std::string_view {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Null>) return "null";
        else if constexpr (std::is_same_v<T, bool>) return "boolean";
        else if constexpr (std::is_same_v<T, double>) return "number";
        else if constexpr (std::is_same_v<T, std::string>) return "text";
        else if constexpr (std::is_same_v<T, Expression>) return "expression";
        else if constexpr (std::is_same_v<T, List>) return "list";
        else if constexpr (std::is_same_v<T, Map>) return "map";
        else return "form";
      },
      v_);
}

// Form

struct Form::Data {
  Kind kind = Kind::machine;
  std::optional<std::string> name;
  std::optional<VariantClause> variant;
  std::optional<std::string> content;
  std::vector<Field> fields;
  std::vector<Form> children;
};

Form::Form(Kind kind, std::optional<std::string> name) {
  auto d = std::make_shared<Data>();
  d->kind = kind;
  d->name = std::move(name);
  data_ = std::move(d);
}

std::shared_ptr<Form::Data> Form::clone() const { return std::make_shared<Data>(*data_); }

Kind Form::kind() const { return data_->kind; }
const std::optional<std::string>& Form::name() const { return data_->name; }
const std::optional<VariantClause>& Form::variant() const { return data_->variant; }
const std::optional<std::string>& Form::content() const { return data_->content; }
const std::vector<Field>& Form::fields() const { return data_->fields; }
const std::vector<Form>& Form::children() const { return data_->children; }

const Value* Form::field(std::string_view key) const {
  for (const auto& f : data_->fields) {
    if (f.key == key) return &f.value;
  }
  return nullptr;
}

Form Form::with_kind(Kind kind) const {
  auto d = clone();
  d->kind = kind;
  return Form(std::shared_ptr<const Data>(std::move(d)));
}

Form Form::with_name(std::optional<std::string> name) const {
  auto d = clone();
  d->name = std::move(name);
  return Form(std::shared_ptr<const Data>(std::move(d)));
}

Form Form::with_variant(std::optional<VariantClause> variant) const {
  auto d = clone();
  d->variant = std::move(variant);
  return Form(std::shared_ptr<const Data>(std::move(d)));
}

Form Form::with_content(std::optional<std::string> content) const {
  auto d = clone();
  d->content = std::move(content);
  return Form(std::shared_ptr<const Data>(std::move(d)));
}

Form Form::with_field(std::string key, Value value) const {
  auto d = clone();
  for (auto& f : d->fields) {
    if (f.key == key) {
      f.value = std::move(value);
      return Form(std::shared_ptr<const Data>(std::move(d)));
    }
  }
  d->fields.push_back(Field{std::move(key), std::move(value)});
  return Form(std::shared_ptr<const Data>(std::move(d)));
}

Form Form::with_field_at(std::size_t index, std::string key, Value value) const {
  if (field(key) != nullptr) throw Error(ErrorCode::invalid_value, "duplicate field key '" + key + "'");
  auto d = clone();
  index = std::min(index, d->fields.size());
  d->fields.insert(d->fields.begin() + static_cast<std::ptrdiff_t>(index),
                   Field{std::move(key), std::move(value)});
  return Form(std::shared_ptr<const Data>(std::move(d)));
}

Form Form::without_field(std::string_view key) const {
  auto d = clone();
  std::erase_if(d->fields, [&](const Field& f) { return f.key == key; });
  return Form(std::shared_ptr<const Data>(std::move(d)));
}

Form Form::with_fields(std::vector<Field> fields) const {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (fields[i].key == fields[j].key) {
        throw Error(ErrorCode::invalid_value, "duplicate field key '" + fields[i].key + "'");
      }
    }
  }
  auto d = clone();
  d->fields = std::move(fields);
  return Form(std::shared_ptr<const Data>(std::move(d)));
}

Form Form::with_child(Form child) const {
  auto d = clone();
  d->children.push_back(std::move(child));
  return Form(std::shared_ptr<const Data>(std::move(d)));
}

Form Form::with_children(std::vector<Form> children) const {
  auto d = clone();
  d->children = std::move(children);
  return Form(std::shared_ptr<const Data>(std::move(d)));
}

bool Form::operator==(const Form& other) const {
  if (data_ == other.data_) return true;
  const Data& a = *data_;
  const Data& b = *other.data_;
  return a.kind == b.kind && a.name == b.name && a.variant == b.variant && a.content == b.content &&
         a.fields == b.fields && a.children == b.children;
}

// CapabilityAtom

std::string CapabilityAtom::str() const {
  return (cls == Class::model ? "model:" : "call:") + target;
}

CapabilityAtom CapabilityAtom::parse(std::string_view text) {
  auto colon = text.find(':');
  if (colon == std::string_view::npos || colon + 1 >= text.size()) {
    throw Error(ErrorCode::invalid_value, "malformed capability atom '" + std::string(text) + "'");
  }
  auto cls = text.substr(0, colon);
  std::string target(text.substr(colon + 1));
  if (cls == "model") return {Class::model, target};
  if (cls == "call") return {Class::call, target};
  throw Error(ErrorCode::invalid_value, "unknown capability class '" + std::string(cls) + "'");
}

std::string_view to_string(DiffOp op) {
  switch (op) {
    case DiffOp::added: return "added";
    case DiffOp::removed: return "removed";
    case DiffOp::modified: return "modified";
  }
  return "?";
}

std::string_view to_string(DiffTarget target) {
  switch (target) {
    case DiffTarget::attribute: return "attribute";
    case DiffTarget::field: return "field";
    case DiffTarget::child: return "child";
    case DiffTarget::form: return "form";
  }
  return "?";
}

std::string format_number(double d) {
  if (d == 0.0) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, res.ptr);
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
  if (!alpha(s[0])) return false;
  return std::all_of(s.begin() + 1, s.end(),
                     [&](char c) { return alpha(c) || (c >= '0' && c <= '9'); });
}

}  // namespace gmeta

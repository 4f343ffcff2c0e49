#include "gmeta/json_codec.hpp"

#include <cmath>

#include "gmeta/error.hpp"
#include "gmeta/form_ops.hpp"

namespace gmeta {

using nlohmann::json;

namespace {

[[noreturn]] void schema(const std::string& msg) { throw Error(ErrorCode::schema_violation, msg); }

const std::string& want_string(const json& j, const char* what) {
  if (!j.is_string()) schema(std::string(what) + " must be a string");
  return j.get_ref<const std::string&>();
}

std::optional<std::string> optional_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return want_string(*it, key);
}

bool special_key(const std::string& k) { return !k.empty() && k[0] == '$'; }

json number_to_json(double d) {
  if (std::nearbyint(d) == d && std::fabs(d) < 9007199254740992.0) return static_cast<std::int64_t>(d);
  return d;
}

}  // namespace

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::malformed_json, e.what());
  }
}

json value_to_json(const Value& v) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Null>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, bool>) {
          return x;
        } else if constexpr (std::is_same_v<T, double>) {
          return number_to_json(x);
        } else if constexpr (std::is_same_v<T, std::string>) {
          return x;
        } else if constexpr (std::is_same_v<T, Expression>) {
          return json{{"$expr", x.text()}};
        } else if constexpr (std::is_same_v<T, List>) {
          json arr = json::array();
          for (const auto& item : x) arr.push_back(value_to_json(item));
          return arr;
        } else if constexpr (std::is_same_v<T, Map>) {
          json obj = json::object();
          bool wrap = false;
          for (const auto& [k, val] : x.entries()) {
            obj[k] = value_to_json(val);
            wrap = wrap || special_key(k);
          }
          return wrap ? json{{"$map", obj}} : obj;
        } else {
          return json{{"$form", form_to_json(x)}};
        }
      },
      v.storage());
}

Value value_from_json(const json& j) {
  switch (j.type()) {
    case json::value_t::null: return Null{};
    case json::value_t::boolean: return j.get<bool>();
    case json::value_t::number_integer:
    case json::value_t::number_unsigned:
    case json::value_t::number_float: return j.get<double>();
    case json::value_t::string: return j.get<std::string>();
    case json::value_t::array: {
      List l;
      for (const auto& item : j) l.push_back(value_from_json(item));
      return l;
    }
    case json::value_t::object: {
      if (j.size() == 1) {
        const auto& [k, inner] = *j.items().begin();
        if (k == "$form") return form_from_json(inner);
        if (k == "$expr") {
          try {
            return Value::expression(want_string(inner, "$expr"));
          } catch (const Error& e) {
            schema(std::string("$expr: ") + e.what());
          }
        }
        if (k == "$map") {
          if (!inner.is_object()) schema("$map must be an object");
          Map m;
          for (const auto& [mk, mv] : inner.items()) m.insert_or_assign(mk, value_from_json(mv));
          return m;
        }
      }
      Map m;
      for (const auto& [k, val] : j.items()) {
        if (special_key(k)) schema("unexpected key '" + k + "'");
        m.insert_or_assign(k, value_from_json(val));
      }
      return m;
    }
    default: schema("unsupported JSON value");
  }
}

json form_to_json(const Form& f) {
  json j;
  j["kind"] = std::string(keyword(f.kind()));
  j["name"] = f.name() ? json(*f.name()) : json(nullptr);
  if (f.variant()) {
    j["variant"] = {{"key", f.variant()->key}, {"value", value_to_json(f.variant()->value)}};
  } else {
    j["variant"] = nullptr;
  }
  j["content"] = f.content() ? json(*f.content()) : json(nullptr);
  json fields = json::array();
  for (const auto& fld : f.fields()) fields.push_back(json::array({fld.key, value_to_json(fld.value)}));
  j["fields"] = std::move(fields);
  json children = json::array();
  for (const auto& c : f.children()) children.push_back(form_to_json(c));
  j["children"] = std::move(children);
  return j;
}

Form form_from_json(const json& j) {
  if (!j.is_object()) schema("form must be an object");
  for (const auto& [k, _] : j.items()) {
    if (k != "kind" && k != "name" && k != "variant" && k != "content" && k != "fields" && k != "children") {
      schema("unknown form key '" + k + "'");
    }
  }
  auto kit = j.find("kind");
  if (kit == j.end()) schema("kind is required");
  const auto& word = want_string(*kit, "kind");
  auto kind = kind_from_keyword(word);
  if (!kind) schema("unknown kind '" + word + "'");
  Form f(*kind, optional_string(j, "name"));
  if (auto vit = j.find("variant"); vit != j.end() && !vit->is_null()) {
    if (!vit->is_object() || vit->size() != 2 || !vit->contains("key") || !vit->contains("value")) {
      schema("variant must be {key, value}");
    }
    Value v = value_from_json(vit->at("value"));
    if (!v.is_scalar()) schema("variant value must be a scalar");
    f = f.with_variant(VariantClause{want_string(vit->at("key"), "variant key"), std::move(v)});
  }
  f = f.with_content(optional_string(j, "content"));
  if (auto fit = j.find("fields"); fit != j.end()) {
    if (!fit->is_array()) schema("fields must be an array");
    std::vector<Field> fields;
    for (const auto& pair : *fit) {
      if (!pair.is_array() || pair.size() != 2) schema("field entries are [key, value] pairs");
      fields.push_back({want_string(pair[0], "field key"), value_from_json(pair[1])});
    }
    try {
      f = f.with_fields(std::move(fields));
    } catch (const Error& e) {
      schema(e.what());
    }
  }
  if (auto cit = j.find("children"); cit != j.end()) {
    if (!cit->is_array()) schema("children must be an array");
    std::vector<Form> kids;
    for (const auto& c : *cit) kids.push_back(form_from_json(c));
    f = f.with_children(std::move(kids));
  }
  return f;
}

json diff_entry_to_json(const DiffEntry& d) {
  json j{{"path", d.path}, {"op", std::string(to_string(d.op))}, {"target", std::string(to_string(d.target))}};
  if (d.before) j["before"] = value_to_json(*d.before);
  if (d.after) j["after"] = value_to_json(*d.after);
  if (d.index) j["index"] = *d.index;
  return j;
}

DiffEntry diff_entry_from_json(const json& j) {
  if (!j.is_object()) schema("diff entry must be an object");
  DiffEntry d;
  const json path = j.value("path", json());
  const json op_j = j.value("op", json());
  const json target_j = j.value("target", json());
  d.path = want_string(path, "path");
  const auto& op = want_string(op_j, "op");
  if (op == "added") {
    d.op = DiffOp::added;
  } else if (op == "removed") {
    d.op = DiffOp::removed;
  } else if (op == "modified") {
    d.op = DiffOp::modified;
  } else {
    schema("unknown diff op '" + op + "'");
  }
  const auto& target = want_string(target_j, "target");
  if (target == "attribute") {
    d.target = DiffTarget::attribute;
  } else if (target == "field") {
    d.target = DiffTarget::field;
  } else if (target == "child") {
    d.target = DiffTarget::child;
  } else if (target == "form") {
    d.target = DiffTarget::form;
  } else {
    schema("unknown diff target '" + target + "'");
  }
  if (j.contains("before")) d.before = value_from_json(j["before"]);
  if (j.contains("after")) d.after = value_from_json(j["after"]);
  if (j.contains("index")) {
    if (!j["index"].is_number_unsigned() && !j["index"].is_number_integer()) schema("index must be an integer");
    d.index = j["index"].get<std::size_t>();
  }
  return d;
}

json diff_to_json(const FormDiff& d) {
  json arr = json::array();
  for (const auto& e : d.entries) arr.push_back(diff_entry_to_json(e));
  return arr;
}

FormDiff diff_from_json(const json& j) {
  if (!j.is_array()) schema("diff must be an array");
  FormDiff d;
  for (const auto& e : j) d.entries.push_back(diff_entry_from_json(e));
  return d;
}

std::string to_json(const Form& f) { return form_to_json(f).dump(); }

Form from_json(std::string_view text) { return form_from_json(parse_json(text)); }

}  // namespace gmeta

#pragma once

// JSON interchange for forms, values and diffs.
//
// Form object: {kind, name, variant, content, fields: [[key, value]...],
// children: [...]}. Values map onto JSON directly, except Form values
// ({"$form": ...}), unevaluated expressions ({"$expr": text}) and maps whose
// keys start with '$' ({"$map": {...}}).

#include <json.hpp>

#include "gmeta/form.hpp"

namespace gmeta {

nlohmann::json form_to_json(const Form& f);
/// Throws schema-violation.
Form form_from_json(const nlohmann::json& j);

nlohmann::json value_to_json(const Value& v);
Value value_from_json(const nlohmann::json& j);

nlohmann::json diff_entry_to_json(const DiffEntry& d);
DiffEntry diff_entry_from_json(const nlohmann::json& j);
nlohmann::json diff_to_json(const FormDiff& d);
FormDiff diff_from_json(const nlohmann::json& j);

/// Throws malformed-json.
nlohmann::json parse_json(std::string_view text);

}  // namespace gmeta

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gmeta/form.hpp"

namespace gmeta {

// Construction

Form new_form(Kind kind, std::optional<std::string> name = std::nullopt);
/// Throws invalid-kind for words outside the keyword set.
Form new_form(std::string_view kind_word, std::optional<std::string> name = std::nullopt);

// Navigation
//
// Paths are dotted. Each segment resolves, in order, to a child (by name, or
// by kind word for unnamed children, or "#k" for the k-th child), a field
// key, or an attribute terminal (name, kind, variant_key, variant_value,
// content). Navigation continues into Form- and Map-valued fields.

std::optional<Value> get(const Form& f, std::string_view path);
std::optional<Form> section(const Form& f, Kind verb);
std::optional<Form> step(const Form& f, std::string_view name);
std::vector<Form> steps(const Form& f);
std::size_t count_steps(const Form& f);
std::map<Kind, std::size_t> step_types(const Form& f);

/// Segment that addresses children()[index] from its parent: the child's
/// name or kind word when unique among siblings, "#index" otherwise.
std::string child_segment(const Form& parent, std::size_t index);

// Transformation

/// Writes a field, an attribute terminal, a Map entry, or (given a Form) a
/// child.
Form set(const Form& f, std::string_view path, const Value& v);
/// An empty parent path addresses the root.
Form add_child(const Form& f, std::string_view parent_path, const Form& child);
Form remove_child(const Form& f, std::string_view path);
Form replace_child(const Form& f, std::string_view path, const Form& child);
Form merge(const Form& base, const Form& overlay);

// Analysis

FormDiff diff(const Form& a, const Form& b);
/// Replays diff(a, b) on a; yields b.
Form apply_diff(const Form& a, const FormDiff& d);
std::vector<Violation> validate(const Form& f);
/// Throws malformed-ask for an ask step without a using/from clause.
CapSet capabilities(const Form& f);

// Serialization

/// Canonical surface text. Throws invalid-form when validate(f) is non-empty.
std::string to_text(const Form& f);
Form from_text(std::string_view text);
/// Lowercase hex SHA-256 of the canonical text.
std::string hash(const Form& f);
std::string to_json(const Form& f);
Form from_json(std::string_view text);

}  // namespace gmeta

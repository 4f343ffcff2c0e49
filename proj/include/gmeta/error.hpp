#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gmeta {

enum class ErrorCode {
  invalid_kind,
  missing_required_name,
  malformed_path,
  path_not_found,
  illegal_attribute_write,
  illegal_child_kind,
  kind_mismatch,
  malformed_ask,
  invalid_form,
  invalid_value,
  malformed_json,
  schema_violation,
  parse_error,
  malformed_expression,
  unbound_identifier,
  type_mismatch,
  no_case_matched,
  unknown_builtin,
  arity_mismatch,
  splice_type_mismatch,
  unknown_old_hash,
  missing_evidence,
  unregistered_machine,
  unauthorized_capability,
  provider_error,
  system_machine_error,
  missing_definition,
  missing_input,
  policy_error,
  io_error,
  internal,
};

/// Stable kebab-case name, e.g. "path-not-found".
std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gmeta

#include "gmeta/error.hpp"

namespace gmeta {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_kind: return "invalid-kind";
    case ErrorCode::missing_required_name: return "missing-required-name";
    case ErrorCode::malformed_path: return "malformed-path";
    case ErrorCode::path_not_found: return "path-not-found";
    case ErrorCode::illegal_attribute_write: return "illegal-attribute-write";
    case ErrorCode::illegal_child_kind: return "illegal-child-kind";
    case ErrorCode::kind_mismatch: return "kind-mismatch";
    case ErrorCode::malformed_ask: return "malformed-ask";
    case ErrorCode::invalid_form: return "invalid-form";
    case ErrorCode::invalid_value: return "invalid-value";
    case ErrorCode::malformed_json: return "malformed-json";
    case ErrorCode::schema_violation: return "schema-violation";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::malformed_expression: return "malformed-expression";
    case ErrorCode::unbound_identifier: return "unbound-identifier";
    case ErrorCode::type_mismatch: return "type-mismatch";
    case ErrorCode::no_case_matched: return "no-case-matched";
    case ErrorCode::unknown_builtin: return "unknown-builtin";
    case ErrorCode::arity_mismatch: return "arity-mismatch";
    case ErrorCode::splice_type_mismatch: return "splice-type-mismatch";
    case ErrorCode::unknown_old_hash: return "unknown-old-hash";
    case ErrorCode::missing_evidence: return "missing-evidence";
    case ErrorCode::unregistered_machine: return "unregistered-machine";
    case ErrorCode::unauthorized_capability: return "unauthorized-capability";
    case ErrorCode::provider_error: return "provider-error";
    case ErrorCode::system_machine_error: return "system-machine-error";
    case ErrorCode::missing_definition: return "missing-definition";
    case ErrorCode::missing_input: return "missing-input";
    case ErrorCode::policy_error: return "policy-error";
    case ErrorCode::io_error: return "io-error";
    case ErrorCode::internal: return "internal";
  }
  return "unknown";
}

}  // namespace gmeta

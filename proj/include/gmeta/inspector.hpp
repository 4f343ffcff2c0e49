#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gmeta/form.hpp"

namespace gmeta {

/// Declared provenance of a materialization request, lowest first.
enum class TrustLevel { untrusted, validated_llm, approved_generator, human };

std::string_view to_string(TrustLevel t);
std::optional<TrustLevel> trust_from_string(std::string_view s);

struct PolicyContext {
  /// Exact atoms ("model:x", "call:@system/runtime/eval") or patterns with
  /// one trailing '*' after a ':' or '/' boundary ("model:*", "call:@system/*").
  std::vector<std::string> allowed_caps;
  /// Model names; "*" admits any model.
  std::vector<std::string> allowed_models;
  bool require_governance_section = false;
  std::optional<std::int64_t> max_steps;
  /// (kind word, field key)
  std::vector<std::pair<std::string, std::string>> required_fields;
  std::map<std::string, std::int64_t> model_costs;
  std::int64_t default_model_cost = 0;
  std::int64_t compute_step_cost = 0;
  std::int64_t budget = 0;
  TrustLevel min_trust = TrustLevel::untrusted;

  /// Everything allowed, no structural requirements, budget 100.
  static PolicyContext permissive();
};

/// Throws policy-error for unknown keys, wrong types, negative budgets or
/// malformed capability patterns.
PolicyContext policy_from_json(const nlohmann::json& j);
PolicyContext load_policy(std::string_view json_text);
nlohmann::json policy_to_json(const PolicyContext& pi);

bool pattern_well_formed(std::string_view pattern);
bool capability_permitted(const CapabilityAtom& atom, const std::vector<std::string>& patterns);

enum class Verdict { approved, rejected };
std::string_view to_string(Verdict v);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;

  bool operator==(const CheckResult&) const = default;
};

struct InspectionReport {
  std::string form_hash;
  Verdict verdict = Verdict::rejected;
  std::vector<CheckResult> checks;
  CapSet required_caps;
  std::int64_t estimated_cost = 0;

  bool approved() const { return verdict == Verdict::approved; }
  std::vector<std::string> failed_checks() const;

  bool operator==(const InspectionReport&) const = default;
};

inline constexpr std::string_view kCheckNames[] = {"valid-structure",         "required-fields",
                                                   "permitted-capabilities",  "model-authorization",
                                                   "governance-presence",     "trust-level"};

/// Throws malformed-ask.
CapSet compute_capset(const Form& f);
std::int64_t estimate_cost(const Form& f, const PolicyContext& pi);
/// Total: malformed forms fail checks, they never throw.
InspectionReport inspect_form(const Form& f, const PolicyContext& pi, TrustLevel trust);

nlohmann::json report_to_json(const InspectionReport& r);
InspectionReport report_from_json(const nlohmann::json& j);
std::string render_report(const InspectionReport& r);

}  // namespace gmeta

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gmeta/directive.hpp"
#include "gmeta/error.hpp"
#include "gmeta/form.hpp"
#include "gmeta/inspector.hpp"
#include "gmeta/registry.hpp"

namespace gmeta {

struct ModelInvocation {
  std::string machine;
  std::string step;
  std::string model;
  /// Content lines of the step's `task` block.
  std::string task;
  /// (key, type word) from the step's `returns` block.
  std::vector<std::pair<std::string, std::string>> returns;
};

class ModelProvider {
 public:
  virtual ~ModelProvider() = default;
  virtual Map invoke(const ModelInvocation& call) = 0;
};

/// Canned responses keyed "machine/step". Unkeyed calls get zero values
/// ("" for text, 0 for number, false for boolean, null otherwise). Throws
/// provider-error when a canned response does not fit the returns schema.
std::shared_ptr<ModelProvider> mock_provider(Map config);
/// JSON object form of the mock configuration.
Map load_mock_config(std::string_view json_text);

/// Throws provider-error unless `response` has exactly the schema keys with
/// values of the declared types.
void check_response(const ModelInvocation& call, const Map& response);

struct RunRequest {
  Machine machine;
  Map inputs;
  std::shared_ptr<ModelProvider> provider;
  PolicyContext pi;
  TrustLevel trust = TrustLevel::untrusted;
};

struct StepFailure {
  std::string step;
  ErrorCode code;
  std::string message;
};

struct RunResult {
  Map step_values;
  DirectiveLog trace;
  std::optional<StepFailure> failure;

  bool ok() const { return !failure.has_value(); }
};

/// Throws unregistered-machine when the machine is not decision-backed in
/// `registry`, missing-input when a required input is absent. Step errors end
/// the run and are reported in RunResult::failure.
RunResult run(Registry& registry, const RunRequest& req);

/// Names of inputs declared `required` under provides/inputs.
std::vector<std::string> required_inputs(const Form& machine);

Form reflect_of(const Machine& m);

struct SystemEvalResult {
  MaterializeResult materialization;
  std::optional<RunResult> run;
};

SystemEvalResult system_eval(Registry& registry, const Form& definition, const PolicyContext& pi, TrustLevel trust,
                             std::shared_ptr<ModelProvider> provider, const Map& inputs = {});

/// Throws missing-definition when `definition` is null, system-machine-error
/// when it is not a form.
MaterializeResult system_propose(Registry& registry, const Value& definition, const Value& evidence,
                                 std::optional<std::string> old, const PolicyContext& pi, TrustLevel trust);

inline constexpr std::string_view kSystemPropose = "@system/evolution/propose";
inline constexpr std::string_view kSystemEval = "@system/runtime/eval";

nlohmann::json directive_to_json(const Directive& d);

}  // namespace gmeta

#include "gmeta/inspector.hpp"

#include <set>

#include "gmeta/error.hpp"
#include "gmeta/form_ops.hpp"
#include "gmeta/json_codec.hpp"

namespace gmeta {

using nlohmann::json;

std::string_view to_string(TrustLevel t) {
  switch (t) {
    case TrustLevel::untrusted: return "untrusted";
    case TrustLevel::validated_llm: return "validated_llm";
    case TrustLevel::approved_generator: return "approved_generator";
    case TrustLevel::human: return "human";
  }
  return "?";
}

std::optional<TrustLevel> trust_from_string(std::string_view s) {
  for (auto t : {TrustLevel::untrusted, TrustLevel::validated_llm, TrustLevel::approved_generator, TrustLevel::human}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

std::string_view to_string(Verdict v) { return v == Verdict::approved ? "approved" : "rejected"; }

PolicyContext PolicyContext::permissive() {
  PolicyContext pi;
  pi.allowed_caps = {"model:*", "call:*"};
  pi.allowed_models = {"*"};
  pi.default_model_cost = 10;
  pi.compute_step_cost = 1;
  pi.budget = 100;
  return pi;
}

bool pattern_well_formed(std::string_view p) {
  std::string_view target;
  if (p.rfind("model:", 0) == 0) {
    target = p.substr(6);
  } else if (p.rfind("call:", 0) == 0) {
    target = p.substr(5);
  } else {
    return false;
  }
  auto star = p.find('*');
  if (star == std::string_view::npos) return !target.empty();
  if (star != p.size() - 1) return false;
  char before = p[star - 1];
  return before == ':' || before == '/';
}

bool capability_permitted(const CapabilityAtom& atom, const std::vector<std::string>& patterns) {
  const std::string s = atom.str();
  for (const auto& p : patterns) {
    if (!p.empty() && p.back() == '*') {
      std::string_view prefix(p.data(), p.size() - 1);
      if (s.size() > prefix.size() && s.compare(0, prefix.size(), prefix) == 0) return true;
    } else if (p == s) {
      return true;
    }
  }
  return false;
}

namespace {

[[noreturn]] void policy_error(const std::string& msg) { throw Error(ErrorCode::policy_error, msg); }

std::int64_t non_negative(const json& j, const char* key) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) policy_error(std::string(key) + " must be an integer");
  auto n = j.get<std::int64_t>();
  if (n < 0) policy_error(std::string(key) + " must be non-negative");
  return n;
}

std::vector<std::string> string_array(const json& j, const char* key) {
  if (!j.is_array()) policy_error(std::string(key) + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& s : j) {
    if (!s.is_string()) policy_error(std::string(key) + " must be an array of strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

struct Located {
  std::string path;
  Form form;
};

void walk(const Form& f, const std::string& path, std::vector<Located>& out) {
  out.push_back({path, f});
  for (std::size_t i = 0; i < f.children().size(); ++i) {
    auto seg = child_segment(f, i);
    walk(f.children()[i], path.empty() ? seg : path + "." + seg, out);
  }
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

const std::string* ask_target(const Form& ask, std::string_view key) {
  const auto& vc = ask.variant();
  if (!vc || vc->key != key) return nullptr;
  const auto* s = vc->value.get_if<std::string>();
  return s && !s->empty() ? s : nullptr;
}

bool model_allowed(const std::string& model, const std::vector<std::string>& allowed) {
  for (const auto& m : allowed) {
    if (m == "*" || m == model) return true;
  }
  return false;
}

}  // namespace

PolicyContext policy_from_json(const json& j) {
  if (!j.is_object()) policy_error("policy must be a JSON object");
  PolicyContext pi;
  for (const auto& [key, v] : j.items()) {
    if (key == "allowed_caps") {
      pi.allowed_caps = string_array(v, "allowed_caps");
      for (const auto& p : pi.allowed_caps) {
        if (!pattern_well_formed(p)) policy_error("malformed capability pattern '" + p + "'");
      }
    } else if (key == "allowed_models") {
      pi.allowed_models = string_array(v, "allowed_models");
    } else if (key == "require_governance_section") {
      if (!v.is_boolean()) policy_error("require_governance_section must be a boolean");
      pi.require_governance_section = v.get<bool>();
    } else if (key == "max_steps") {
      if (!v.is_null()) pi.max_steps = non_negative(v, "max_steps");
    } else if (key == "required_fields") {
      if (!v.is_array()) policy_error("required_fields must be an array of [kind, key]");
      for (const auto& pair : v) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string()) {
          policy_error("required_fields must be an array of [kind, key]");
        }
        auto kind = pair[0].get<std::string>();
        if (!kind_from_keyword(kind)) policy_error("required_fields: unknown kind '" + kind + "'");
        pi.required_fields.emplace_back(std::move(kind), pair[1].get<std::string>());
      }
    } else if (key == "model_costs") {
      if (!v.is_object()) policy_error("model_costs must be an object");
      for (const auto& [model, cost] : v.items()) pi.model_costs[model] = non_negative(cost, "model_costs");
    } else if (key == "default_model_cost") {
      pi.default_model_cost = non_negative(v, "default_model_cost");
    } else if (key == "compute_step_cost") {
      pi.compute_step_cost = non_negative(v, "compute_step_cost");
    } else if (key == "budget") {
      pi.budget = non_negative(v, "budget");
    } else if (key == "min_trust") {
      if (!v.is_string()) policy_error("min_trust must be a string");
      auto t = trust_from_string(v.get<std::string>());
      if (!t) policy_error("unknown trust level '" + v.get<std::string>() + "'");
      pi.min_trust = *t;
    } else {
      policy_error("unknown policy key '" + key + "'");
    }
  }
  return pi;
}

PolicyContext load_policy(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    policy_error(std::string("policy is not valid JSON: ") + e.what());
  }
  return policy_from_json(j);
}

json policy_to_json(const PolicyContext& pi) {
  json required = json::array();
  for (const auto& [k, f] : pi.required_fields) required.push_back(json::array({k, f}));
  return json{{"allowed_caps", pi.allowed_caps},
              {"allowed_models", pi.allowed_models},
              {"require_governance_section", pi.require_governance_section},
              {"max_steps", pi.max_steps ? json(*pi.max_steps) : json(nullptr)},
              {"required_fields", required},
              {"model_costs", pi.model_costs},
              {"default_model_cost", pi.default_model_cost},
              {"compute_step_cost", pi.compute_step_cost},
              {"budget", pi.budget},
              {"min_trust", std::string(to_string(pi.min_trust))}};
}

std::vector<std::string> InspectionReport::failed_checks() const {
  std::vector<std::string> out;
  for (const auto& c : checks) {
    if (!c.passed) out.push_back(c.name);
  }
  return out;
}

CapSet compute_capset(const Form& f) { return capabilities(f); }

std::int64_t estimate_cost(const Form& f, const PolicyContext& pi) {
  std::vector<Located> all;
  walk(f, "", all);
  std::int64_t cost = 0;
  for (const auto& [_, node] : all) {
    if (node.kind() == Kind::compute) {
      cost += pi.compute_step_cost;
    } else if (node.kind() == Kind::ask) {
      if (const auto* model = ask_target(node, "using")) {
        auto it = pi.model_costs.find(*model);
        cost += it == pi.model_costs.end() ? pi.default_model_cost : it->second;
      } else if (ask_target(node, "from")) {
        cost += pi.compute_step_cost;
      }
    }
  }
  return cost;
}

InspectionReport inspect_form(const Form& f, const PolicyContext& pi, TrustLevel trust) {
  InspectionReport r;
  r.form_hash = hash(f);
  std::vector<Located> all;
  walk(f, "", all);

  // 1
  {
    auto violations = validate(f);
    std::vector<std::string> items;
    for (const auto& v : violations) items.push_back((v.path.empty() ? "<root>" : v.path) + ": " + v.rule);
    r.checks.push_back({"valid-structure", violations.empty(),
                        violations.empty() ? "no violations" : join(items, "; ")});
  }
  // 2
  {
    std::vector<std::string> missing;
    for (const auto& [kind_word, key] : pi.required_fields) {
      auto kind = kind_from_keyword(kind_word);
      for (const auto& [path, node] : all) {
        if (kind && node.kind() == *kind && !node.field(key)) {
          missing.push_back((path.empty() ? "<root>" : path) + " lacks " + key);
        }
      }
    }
    r.checks.push_back({"required-fields", missing.empty(),
                        missing.empty() ? "all required fields present" : join(missing, "; ")});
  }
  // 3
  {
    std::vector<std::string> problems;
    for (const auto& [path, node] : all) {
      if (node.kind() != Kind::ask) continue;
      const std::string* model = ask_target(node, "using");
      const std::string* call = ask_target(node, "from");
      if (model) {
        r.required_caps.insert({CapabilityAtom::Class::model, *model});
      } else if (call) {
        r.required_caps.insert({CapabilityAtom::Class::call, *call});
      } else {
        problems.push_back("malformed ask at " + path);
      }
    }
    for (const auto& atom : r.required_caps) {
      if (!capability_permitted(atom, pi.allowed_caps)) problems.push_back("not permitted: " + atom.str());
    }
    r.checks.push_back({"permitted-capabilities", problems.empty(),
                        "capability containment: " +
                            (problems.empty() ? std::to_string(r.required_caps.size()) + " atom(s) permitted"
                                              : join(problems, "; "))});
  }
  // 4
  {
    std::vector<std::string> denied;
    for (const auto& atom : r.required_caps) {
      if (atom.cls == CapabilityAtom::Class::model && !model_allowed(atom.target, pi.allowed_models)) {
        denied.push_back(atom.target);
      }
    }
    r.checks.push_back({"model-authorization", denied.empty(),
                        "model authorization: " +
                            (denied.empty() ? std::string("all models allowed") : "unauthorized " + join(denied, ", "))});
  }
  // 5
  {
    r.estimated_cost = estimate_cost(f, pi);
    std::vector<std::string> parts;
    bool ok = true;
    if (pi.require_governance_section) {
      bool present = f.kind() == Kind::machine && section(f, Kind::governance).has_value();
      ok = ok && present;
      parts.push_back(present ? "governance section present" : "governance section missing");
    }
    auto n = static_cast<std::int64_t>(count_steps(f));
    if (pi.max_steps) {
      bool within = n <= *pi.max_steps;
      ok = ok && within;
      parts.push_back("steps " + std::to_string(n) + (within ? " <= " : " > ") + std::to_string(*pi.max_steps));
    }
    bool affordable = r.estimated_cost <= pi.budget;
    ok = ok && affordable;
    r.checks.push_back({"governance-presence", ok,
                        "policy compliance: " + (parts.empty() ? std::string("no structural policy") : join(parts, ", ")) +
                            "; resource bounds: cost " + std::to_string(r.estimated_cost) +
                            (affordable ? " <= " : " > ") + "budget " + std::to_string(pi.budget)});
  }
  // 6
  {
    bool ok = trust >= pi.min_trust;
    r.checks.push_back({"trust-level", ok,
                        std::string(to_string(trust)) + (ok ? " meets " : " below ") + std::string(to_string(pi.min_trust))});
  }
  r.verdict = r.failed_checks().empty() ? Verdict::approved : Verdict::rejected;
  return r;
}

json report_to_json(const InspectionReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  json caps = json::array();
  for (const auto& a : r.required_caps) caps.push_back(a.str());
  return json{{"form_hash", r.form_hash},
              {"verdict", std::string(to_string(r.verdict))},
              {"checks", checks},
              {"required_caps", caps},
              {"estimated_cost", r.estimated_cost}};
}

InspectionReport report_from_json(const json& j) {
  try {
    InspectionReport r;
    r.form_hash = j.at("form_hash").get<std::string>();
    auto verdict = j.at("verdict").get<std::string>();
    if (verdict != "approved" && verdict != "rejected") throw Error(ErrorCode::schema_violation, "verdict");
    r.verdict = verdict == "approved" ? Verdict::approved : Verdict::rejected;
    for (const auto& c : j.at("checks")) {
      r.checks.push_back({c.at("name").get<std::string>(), c.at("passed").get<bool>(), c.at("detail").get<std::string>()});
    }
    for (const auto& a : j.at("required_caps")) r.required_caps.insert(CapabilityAtom::parse(a.get<std::string>()));
    r.estimated_cost = j.at("estimated_cost").get<std::int64_t>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema_violation, std::string("inspection report: ") + e.what());
  }
}

std::string render_report(const InspectionReport& r) {
  std::string out = "form " + r.form_hash + "\n";
  out += "verdict: " + std::string(to_string(r.verdict)) + "\n";
  for (const auto& c : r.checks) out += std::string(c.passed ? "  pass " : "  FAIL ") + c.name + ": " + c.detail + "\n";
  std::vector<std::string> caps;
  for (const auto& a : r.required_caps) caps.push_back(a.str());
  out += "required caps: " + (caps.empty() ? std::string("(none)") : join(caps, ", ")) + "\n";
  out += "estimated cost: " + std::to_string(r.estimated_cost) + "\n";
  return out;
}

}  // namespace gmeta

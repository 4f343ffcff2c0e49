#include "gmeta/runtime.hpp"

#include <set>

#include "gmeta/expression.hpp"
#include "gmeta/form_ops.hpp"
#include "gmeta/json_codec.hpp"
#include "lex.hpp"

namespace gmeta {

namespace {

constexpr int kMaxNesting = 8;

std::string type_word(const Value& v) {
  if (const auto* e = v.get_if<Expression>()) return std::string(lex::trim(e->text()));
  if (const auto* s = v.get_if<std::string>()) return *s;
  return std::string(v.type_name());
}

Value zero_value(std::string_view type) {
  if (type == "text" || type == "string") return std::string();
  if (type == "number") return 0;
  if (type == "boolean" || type == "bool") return false;
  return Null{};
}

bool conforms(const Value& v, std::string_view type) {
  if (type == "text" || type == "string") return v.is<std::string>();
  if (type == "number") return v.is<double>();
  if (type == "boolean" || type == "bool") return v.is<bool>();
  return true;
}

class MockProvider final : public ModelProvider {
 public:
  explicit MockProvider(Map config) : config_(std::move(config)) {}

  Map invoke(const ModelInvocation& call) override {
    if (const Value* canned = config_.find(call.machine + "/" + call.step)) {
      const auto* m = canned->get_if<Map>();
      if (!m) throw Error(ErrorCode::provider_error, call.machine + "/" + call.step + ": response must be an object");
      check_response(call, *m);
      return *m;
    }
    Map out;
    for (const auto& [key, type] : call.returns) out.insert_or_assign(key, zero_value(type));
    return out;
  }

 private:
  Map config_;
};

}  // namespace

void check_response(const ModelInvocation& call, const Map& response) {
  const std::string where = call.machine + "/" + call.step;
  std::set<std::string> expected;
  for (const auto& [key, type] : call.returns) {
    expected.insert(key);
    const Value* v = response.find(key);
    if (!v) throw Error(ErrorCode::provider_error, where + ": response lacks '" + key + "'");
    if (!conforms(*v, type)) {
      throw Error(ErrorCode::provider_error,
                  where + ": '" + key + "' should be " + type + ", got " + std::string(v->type_name()));
    }
  }
  for (const auto& [key, _] : response.entries()) {
    if (!expected.count(key)) throw Error(ErrorCode::provider_error, where + ": unexpected key '" + key + "'");
  }
}

std::shared_ptr<ModelProvider> mock_provider(Map config) { return std::make_shared<MockProvider>(std::move(config)); }

Map load_mock_config(std::string_view json_text) {
  auto j = parse_json(json_text);
  if (!j.is_object()) throw Error(ErrorCode::provider_error, "mock config must be a JSON object");
  Map out;
  for (const auto& [key, response] : j.items()) {
    if (!response.is_object()) throw Error(ErrorCode::provider_error, key + ": response must be an object");
    out.insert_or_assign(key, value_from_json(response));
  }
  return out;
}

std::vector<std::string> required_inputs(const Form& machine) {
  std::vector<std::string> out;
  auto provides = section(machine, Kind::provides);
  if (!provides) return out;
  for (const auto& c : provides->children()) {
    if (c.kind() != Kind::inputs) continue;
    for (const auto& f : c.fields()) {
      std::string decl = type_word(f.value);
      std::string_view rest = decl;
      while (!rest.empty()) {
        auto comma = rest.find(',');
        if (lex::trim(rest.substr(0, comma)) == "required") {
          out.push_back(f.key);
          break;
        }
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
      }
    }
  }
  return out;
}

Form reflect_of(const Machine& m) { return m.reflect_constant; }

nlohmann::json directive_to_json(const Directive& d) {
  return nlohmann::json{{"kind", std::string(to_string(d.kind))},
                        {"payload", value_to_json(d.payload)},
                        {"decision", d.decision ? nlohmann::json(*d.decision) : nlohmann::json(nullptr)}};
}

MaterializeResult system_propose(Registry& registry, const Value& definition, const Value& evidence,
                                 std::optional<std::string> old, const PolicyContext& pi, TrustLevel trust) {
  if (definition.is_null()) throw Error(ErrorCode::missing_definition, "no definition to propose");
  const auto* f = definition.get_if<Form>();
  if (!f) {
    throw Error(ErrorCode::system_machine_error,
                "definition must be a form, got " + std::string(definition.type_name()));
  }
  return registry.materialize(*f, pi, trust, Mode::propose, evidence, std::move(old));
}

/// Step interpreter; holds the key that lets runtime directives into a trace.
class Interpreter {
 public:
  Interpreter(Registry& registry, const RunRequest& req, int depth) : registry_(registry), req_(req), depth_(depth) {}

  RunResult run() {
    const Machine& m = req_.machine;
    auto backing = registry_.machine(m.form_hash);
    auto record = backing ? registry_.decision(backing->decision_id) : std::nullopt;
    if (!backing || !record || record->verdict != Verdict::approved || record->form_hash != m.form_hash ||
        hash(m.form) != m.form_hash) {
      throw Error(ErrorCode::unregistered_machine, m.form_hash);
    }
    for (const auto& key : required_inputs(m.form)) {
      if (!req_.inputs.find(key)) throw Error(ErrorCode::missing_input, key);
    }

    RunResult result;
    Env env;
    env.bind("input", req_.inputs);
    env.bind_reflect(m.reflect_constant);
    std::set<std::string> step_names;

    for (const auto& s : steps(m.form)) {
      const std::string name = s.name().value_or("");
      try {
        Value v = s.kind() == Kind::compute ? run_compute(s, env, result.trace, step_names) : run_ask(s, env, result.trace);
        result.step_values.insert_or_assign(name, v);
        env.bind(name, std::move(v));
        step_names.insert(name);
      } catch (const Error& e) {
        result.failure = StepFailure{name, e.code(), e.what()};
        break;
      }
    }
    return result;
  }

 private:
  Value run_compute(const Form& s, Env& env, DirectiveLog& trace, const std::set<std::string>& step_names) {
    Env local = env;
    Map out;
    for (const auto& f : s.fields()) {
      Value v = eval_field(f.value, local, trace);
      out.insert_or_assign(f.key, v);
      local.bind(f.key, v);
    }
    // Field names stay visible to later steps unless a step or `input`
    // already owns the name.
    for (const auto& [key, v] : out.entries()) {
      if (key != "input" && !step_names.count(key) && key != s.name()) env.bind(key, v);
    }
    return out;
  }

  void authorize(const CapabilityAtom& atom) {
    if (!req_.machine.authorized_caps.count(atom)) throw Error(ErrorCode::unauthorized_capability, atom.str());
  }

  Directive directive(DirectiveKind kind, const std::string& step, const std::string& target_key,
                      const std::string& target) {
    Map payload{{"machine", req_.machine.form.name().value_or("")},
                {"form_hash", req_.machine.form_hash},
                {"step", step},
                {target_key, target}};
    return Directive{kind, std::move(payload), req_.machine.decision_id};
  }

  Value run_ask(const Form& s, const Env& env, DirectiveLog& trace) {
    const std::string name = s.name().value_or("");
    const auto& vc = s.variant();
    const std::string* target = vc ? vc->value.get_if<std::string>() : nullptr;
    if (!vc || !target) throw Error(ErrorCode::malformed_ask, name);
    if (vc->key == "using") {
      authorize({CapabilityAtom::Class::model, *target});
      ModelInvocation call{req_.machine.form.name().value_or(""), name, *target, "", {}};
      for (const auto& c : s.children()) {
        if (c.kind() == Kind::task && c.content()) {
          if (!call.task.empty()) call.task += "\n";
          call.task += *c.content();
        } else if (c.kind() == Kind::returns) {
          for (const auto& f : c.fields()) call.returns.emplace_back(f.key, type_word(f.value));
        }
      }
      trace.append(directive(DirectiveKind::model_invoke, name, "model", *target), {});
      if (!req_.provider) throw Error(ErrorCode::provider_error, "no model provider configured");
      Map response = req_.provider->invoke(call);
      check_response(call, response);
      return response;
    }
    if (vc->key != "from") throw Error(ErrorCode::malformed_ask, name);
    authorize({CapabilityAtom::Class::call, *target});
    Map args;
    for (const auto& f : s.fields()) args.insert_or_assign(f.key, eval_field(f.value, env, trace));
    trace.append(directive(DirectiveKind::machine_call, name, "target", *target), {});
    return dispatch(*target, args);
  }

  Value dispatch(const std::string& target, const Map& args) {
    const Value* def = args.find("definition");
    if (target == kSystemPropose) {
      const Value* evidence = args.find("evidence");
      if (!def || def->is_null()) throw Error(ErrorCode::missing_definition, "no definition to propose");
      if (!evidence) throw Error(ErrorCode::missing_evidence, "propose needs evidence");
      std::optional<std::string> old = req_.machine.form_hash;
      if (const Value* o = args.find("old")) old = o->is_null() ? std::nullopt : std::optional(type_word(*o));
      auto r = system_propose(registry_, *def, *evidence, old, req_.pi, req_.trust);
      if (!r.approved()) throw Error(ErrorCode::system_machine_error, "proposal rejected: " + join(r.failed_checks()));
      return Map{{"status", "approved"},
                 {"seq", static_cast<double>(*r.ledger_seq)},
                 {"form_hash", r.record.form_hash},
                 {"decision", static_cast<double>(r.record.id)}};
    }
    if (target == kSystemEval) {
      if (!def || def->is_null()) throw Error(ErrorCode::missing_definition, "no definition to evaluate");
      const auto* f = def->get_if<Form>();
      if (!f) throw Error(ErrorCode::system_machine_error, "definition must be a form");
      if (depth_ >= kMaxNesting) throw Error(ErrorCode::system_machine_error, "evaluation nested too deeply");
      Map inputs;
      if (const Value* in = args.find("inputs"); in && in->is<Map>()) inputs = *in->get_if<Map>();
      auto mat = registry_.materialize(*f, req_.pi, req_.trust, Mode::eval);
      if (!mat.approved()) throw Error(ErrorCode::system_machine_error, "evaluation rejected: " + join(mat.failed_checks()));
      RunRequest nested{*mat.machine, std::move(inputs), req_.provider, req_.pi, req_.trust};
      RunResult inner = Interpreter(registry_, nested, depth_ + 1).run();
      if (!inner.ok()) {
        throw Error(ErrorCode::system_machine_error,
                    "evaluated machine failed at " + inner.failure->step + ": " + inner.failure->message);
      }
      return Map{{"status", "ok"}, {"values", inner.step_values}, {"form_hash", mat.record.form_hash}};
    }
    throw Error(ErrorCode::system_machine_error, "unknown system machine " + target);
  }

  static std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + items[i];
    return out;
  }

  Registry& registry_;
  const RunRequest& req_;
  int depth_;
};

RunResult run(Registry& registry, const RunRequest& req) { return Interpreter(registry, req, 0).run(); }

SystemEvalResult system_eval(Registry& registry, const Form& definition, const PolicyContext& pi, TrustLevel trust,
                             std::shared_ptr<ModelProvider> provider, const Map& inputs) {
  SystemEvalResult out{registry.materialize(definition, pi, trust, Mode::eval), std::nullopt};
  if (out.materialization.approved()) {
    RunRequest req{*out.materialization.machine, inputs, std::move(provider), pi, trust};
    out.run = run(registry, req);
  }
  return out;
}

}  // namespace gmeta

#include "gmeta/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gmeta/form_ops.hpp"
#include "gmeta/inspector.hpp"
#include "gmeta/json_codec.hpp"
#include "gmeta/parser.hpp"
#include "gmeta/registry.hpp"
#include "gmeta/runtime.hpp"

namespace gmeta {

using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError(path + ": cannot read file");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Form load_form(const std::string& path) {
  std::string text = read_file(path);
  try {
    return parse_source(text);
  } catch (const ParseError& e) {
    throw UsageError(path + ":" + std::to_string(e.line()) + ":" + std::to_string(e.column()) + ": " +
                     std::string(to_string(e.kind())) + ": " + e.detail());
  } catch (const Error& e) {
    throw UsageError(path + ": " + e.what());
  }
}

TrustLevel parse_trust(const std::string& s) {
  auto t = trust_from_string(s);
  if (!t) throw UsageError("unknown trust level '" + s + "'");
  return *t;
}

PolicyContext read_policy(const std::string& path) {
  try {
    return load_policy(read_file(path));
  } catch (const Error& e) {
    throw UsageError(path + ": " + e.what());
  }
}

Value lex_input(const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  double d = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), d);
  if (!text.empty() && ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(d)) return d;
  return text;
}

std::string one_line(const std::optional<Value>& v) {
  if (!v) return "(none)";
  std::string s = render_literal(*v);
  for (auto& c : s) {
    if (c == '\n') c = ' ';
  }
  return s;
}

struct RegistryFlags {
  std::string ledger;
  std::string decisions;
  std::string machines;

  RegistryFiles files() const {
    RegistryFiles f = RegistryFiles::beside(ledger);
    if (!decisions.empty()) f.decisions = decisions;
    if (!machines.empty()) f.machines = machines;
    return f;
  }
};

std::unique_ptr<Registry> open_registry(const RegistryFlags& flags, bool writable) {
  if (flags.ledger.empty()) return std::make_unique<Registry>();
  try {
    return std::make_unique<Registry>(flags.files(), writable);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

void add_registry_flags(CLI::App* cmd, RegistryFlags& flags) {
  cmd->add_option("--ledger", flags.ledger, "Evolution ledger file (JSON lines)");
  cmd->add_option("--decisions", flags.decisions, "Decision records file (default <ledger>.decisions)");
  cmd->add_option("--machines", flags.machines, "Machine index file (default <ledger>.machines)");
}

void report_rejection(const MaterializeResult& r, std::ostream& err) {
  err << "rejected (decision " << r.record.id << "):";
  for (const auto& name : r.failed_checks()) err << " " << name;
  err << "\n";
  for (const auto& reason : r.record.rejection_reasons) err << "  " << reason << "\n";
}

json run_to_json(const RunResult& r, const DecisionRecord& d) {
  json trace = json::array();
  for (const auto& dir : r.trace.entries()) trace.push_back(directive_to_json(dir));
  json out{{"status", r.ok() ? "ok" : "failed"},
           {"decision", d.id},
           {"form_hash", d.form_hash},
           {"step_values", value_to_json(r.step_values)},
           {"trace", trace}};
  if (r.failure) {
    out["failure"] = {{"step", r.failure->step},
                      {"code", std::string(to_string(r.failure->code))},
                      {"message", r.failure->message}};
  }
  return out;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Governed form toolkit: parse, inspect, materialize and run machine forms", "gmeta"};
  app.require_subcommand(1);

  std::string file, file_b, policy_path, trust_text = "untrusted", models_path, trace_path, evidence_text, old_hash;
  std::vector<std::string> inputs;
  bool as_json = false;
  RegistryFlags reg;
  std::string ledger_action;
  std::int64_t show_seq = -1;

  auto* parse = app.add_subcommand("parse", "Parse a .mt file and print its canonical text");
  parse->add_option("file", file)->required();
  parse->add_flag("--json", as_json, "Print the JSON encoding instead");

  auto* fmt = app.add_subcommand("fmt", "Print the canonical text of a .mt file");
  fmt->add_option("file", file)->required();

  auto* hash_cmd = app.add_subcommand("hash", "Print the SHA-256 of the canonical text");
  hash_cmd->add_option("file", file)->required();

  auto* diff_cmd = app.add_subcommand("diff", "Structural diff of two .mt files");
  diff_cmd->add_option("a", file)->required();
  diff_cmd->add_option("b", file_b)->required();
  diff_cmd->add_flag("--json", as_json);

  auto* inspect = app.add_subcommand("inspect", "Run the six inspection checks");
  inspect->add_option("file", file)->required();
  inspect->add_option("--policy", policy_path)->required();
  inspect->add_option("--trust", trust_text);
  inspect->add_flag("--json", as_json);

  auto* run_cmd = app.add_subcommand("run", "Materialize in eval mode, then run");
  run_cmd->add_option("file", file)->required();
  run_cmd->add_option("--policy", policy_path)->required();
  run_cmd->add_option("--trust", trust_text);
  run_cmd->add_option("--input", inputs, "key=value (numbers and booleans are lexed)");
  run_cmd->add_option("--models", models_path, "Mock provider config (JSON)");
  run_cmd->add_option("--trace", trace_path, "Write the behavioral trace as JSON lines");
  run_cmd->add_flag("--json", as_json);
  add_registry_flags(run_cmd, reg);

  auto* eval_cmd = app.add_subcommand("eval", "Materialize in eval mode without running");
  eval_cmd->add_option("file", file)->required();
  eval_cmd->add_option("--policy", policy_path)->required();
  eval_cmd->add_option("--trust", trust_text);
  eval_cmd->add_flag("--json", as_json);
  add_registry_flags(eval_cmd, reg);

  auto* propose = app.add_subcommand("propose", "Materialize in propose mode (appends to the ledger)");
  propose->add_option("file", file)->required();
  propose->add_option("--policy", policy_path)->required();
  propose->add_option("--trust", trust_text);
  propose->add_option("--evidence", evidence_text, "Evidence as JSON")->required();
  propose->add_option("--old", old_hash, "Hash of the registered version being replaced");
  propose->add_flag("--json", as_json);
  add_registry_flags(propose, reg);

  auto* describe = app.add_subcommand("describe", "Materialize in describe mode");
  describe->add_option("file", file)->required();
  describe->add_option("--policy", policy_path)->required();
  describe->add_option("--trust", trust_text);

  auto* ledger = app.add_subcommand("ledger", "Inspect the evolution ledger and registry");
  ledger->add_option("action", ledger_action)->required()->check(CLI::IsMember({"list", "show", "verify", "audit"}));
  ledger->add_option("seq", show_seq);
  ledger->add_flag("--json", as_json);
  add_registry_flags(ledger, reg);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (parse->parsed()) {
      Form f = load_form(file);
      out << (as_json ? form_to_json(f).dump(2) + "\n" : to_text(f));
      return kExitOk;
    }
    if (fmt->parsed()) {
      out << to_text(load_form(file));
      return kExitOk;
    }
    if (hash_cmd->parsed()) {
      out << hash(load_form(file)) << "\n";
      return kExitOk;
    }
    if (diff_cmd->parsed()) {
      FormDiff d = diff(load_form(file), load_form(file_b));
      if (as_json) {
        out << diff_to_json(d).dump(2) << "\n";
      } else {
        for (const auto& e : d.entries) {
          out << to_string(e.op) << " " << (e.path.empty() ? "<root>" : e.path) << ": " << one_line(e.before)
              << " -> " << one_line(e.after) << "\n";
        }
      }
      return kExitOk;
    }
    if (inspect->parsed()) {
      Form f = load_form(file);
      auto r = inspect_form(f, read_policy(policy_path), parse_trust(trust_text));
      out << (as_json ? report_to_json(r).dump(2) + "\n" : render_report(r));
      return r.approved() ? kExitOk : kExitRejected;
    }
    if (describe->parsed()) {
      Form f = load_form(file);
      Registry registry;
      auto r = registry.materialize(f, read_policy(policy_path), parse_trust(trust_text), Mode::describe);
      if (!r.approved()) {
        report_rejection(r, err);
        return kExitRejected;
      }
      out << *r.description;
      return kExitOk;
    }
    if (eval_cmd->parsed() || propose->parsed()) {
      Form f = load_form(file);
      auto pi = read_policy(policy_path);
      auto trust = parse_trust(trust_text);
      std::optional<Value> evidence;
      if (propose->parsed()) {
        try {
          evidence = value_from_json(parse_json(evidence_text));
        } catch (const Error& e) {
          throw UsageError(std::string("--evidence: ") + e.what());
        }
      }
      auto registry = open_registry(reg, true);
      MaterializeResult r;
      try {
        r = registry->materialize(f, pi, trust, propose->parsed() ? Mode::propose : Mode::eval, evidence,
                                  old_hash.empty() ? std::nullopt : std::optional(old_hash));
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      if (as_json) out << decision_to_json(r.record).dump(2) << "\n";
      if (!r.approved()) {
        report_rejection(r, err);
        return kExitRejected;
      }
      if (!as_json) {
        out << "approved (decision " << r.record.id << ")\nmachine " << r.record.form_hash << "\n";
        if (r.ledger_seq) out << "ledger seq " << *r.ledger_seq << "\n";
      }
      return kExitOk;
    }
    if (run_cmd->parsed()) {
      Form f = load_form(file);
      auto pi = read_policy(policy_path);
      auto trust = parse_trust(trust_text);
      Map input_map;
      for (const auto& kv : inputs) {
        auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--input expects key=value, got '" + kv + "'");
        input_map.insert_or_assign(kv.substr(0, eq), lex_input(kv.substr(eq + 1)));
      }
      Map models;
      if (!models_path.empty()) {
        try {
          models = load_mock_config(read_file(models_path));
        } catch (const Error& e) {
          throw UsageError(models_path + ": " + e.what());
        }
      }
      auto registry = open_registry(reg, true);
      auto mat = registry->materialize(f, pi, trust, Mode::eval);
      if (!mat.approved()) {
        if (as_json) out << decision_to_json(mat.record).dump(2) << "\n";
        report_rejection(mat, err);
        return kExitRejected;
      }
      RunResult result;
      try {
        result = run(*registry, RunRequest{*mat.machine, input_map, mock_provider(models), pi, trust});
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      if (!trace_path.empty()) {
        std::ofstream trace(trace_path, std::ios::binary | std::ios::trunc);
        for (const auto& d : result.trace.entries()) trace << directive_to_json(d).dump() << "\n";
        if (!trace) throw UsageError(trace_path + ": cannot write trace");
      }
      if (as_json) {
        out << run_to_json(result, mat.record).dump(2) << "\n";
      } else {
        for (const auto& [step, value] : result.step_values.entries()) {
          if (const auto* fields = value.get_if<Map>()) {
            for (const auto& [key, v] : fields->entries()) out << step << "." << key << " = " << one_line(v) << "\n";
          } else {
            out << step << " = " << one_line(value) << "\n";
          }
        }
        out << "trace: " << result.trace.size() << " directive(s)";
        for (const auto& d : result.trace.entries()) {
          const Value* step = d.payload.find("step");
          out << "\n  " << to_string(d.kind) << " " << (step ? render_literal(*step) : "");
        }
        out << "\n";
      }
      if (!result.ok()) {
        err << "run failed at step " << result.failure->step << ": " << result.failure->message << "\n";
        return kExitRunFailed;
      }
      return kExitOk;
    }
    if (ledger->parsed()) {
      if (reg.ledger.empty()) throw UsageError("ledger: --ledger is required");
      auto registry = open_registry(reg, false);
      if (ledger_action == "list") {
        auto lines = registry->ledger_lines();
        auto entries = registry->ledger();
        if (as_json) {
          json arr = json::array();
          for (const auto& e : entries) arr.push_back(ledger_entry_to_json(e));
          out << arr.dump(2) << "\n";
        } else {
          for (const auto& e : entries) {
            out << "seq " << e.seq << "  old " << e.old_hash.value_or("-") << "  new " << e.new_hash << "  decision "
                << e.decision_id << "\n";
          }
          out << lines.size() << (lines.size() == 1 ? " entry" : " entries") << "\n";
        }
        return kExitOk;
      }
      if (ledger_action == "show") {
        if (show_seq < 0) throw UsageError("ledger show needs a SEQ");
        for (const auto& e : registry->ledger()) {
          if (e.seq == show_seq) {
            out << ledger_entry_to_json(e).dump(2) << "\n";
            return kExitOk;
          }
        }
        throw UsageError("no ledger entry with seq " + std::to_string(show_seq));
      }
      if (ledger_action == "verify") {
        auto v = registry->verify_ledger();
        if (v.ok) {
          out << "ok: " << v.detail << "\n";
          return kExitOk;
        }
        out << "broken at seq " << *v.first_broken_seq << ": " << v.detail << "\n";
        return kExitAudit;
      }
      auto a = registry->audit_no_bypass();
      if (a.ok) {
        out << "ok: " << registry->machine_count() << " machine(s), all decision-backed\n";
        return kExitOk;
      }
      for (const auto& h : a.orphans) out << "orphan " << h << "\n";
      return kExitAudit;
    }
  } catch (const UsageError& e) {
    err << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace gmeta

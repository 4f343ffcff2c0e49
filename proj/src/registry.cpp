#include "gmeta/registry.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <fstream>
#include <mutex>

#include "gmeta/digest.hpp"
#include "gmeta/error.hpp"
#include "gmeta/form_ops.hpp"
#include "gmeta/json_codec.hpp"

namespace gmeta {

using nlohmann::json;

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::eval: return "eval";
    case Mode::propose: return "propose";
    case Mode::describe: return "describe";
  }
  return "?";
}

std::optional<Mode> mode_from_string(std::string_view s) {
  for (auto m : {Mode::eval, Mode::propose, Mode::describe}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

namespace {

json optional_json(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

std::optional<std::string> optional_string(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::string>();
}

std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::vector<std::string> out;
  if (std::filesystem::is_directory(p)) throw Error(ErrorCode::io_error, p.string() + " is a directory");
  std::ifstream in(p, std::ios::binary);
  if (!in) {
    if (std::filesystem::exists(p)) throw Error(ErrorCode::io_error, "cannot read " + p.string());
    return out;
  }
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

json machine_index_line(const Machine& m) {
  return json{{"form_hash", m.form_hash}, {"decision_id", m.decision_id}, {"form", form_to_json(m.form)}};
}

Machine make_machine(const Form& f, std::string form_hash, std::int64_t decision_id) {
  CapSet caps;
  try {
    caps = capabilities(f);
  } catch (const Error&) {
  }
  return Machine{std::move(form_hash), f, std::move(caps), f, decision_id};
}

}  // namespace

json decision_to_json(const DecisionRecord& d) {
  return json{{"id", d.id},
              {"mode", std::string(to_string(d.mode))},
              {"form_hash", d.form_hash},
              {"verdict", std::string(to_string(d.verdict))},
              {"report", report_to_json(d.report)},
              {"rejection_reasons", d.rejection_reasons},
              {"ledger_seq", d.ledger_seq ? json(*d.ledger_seq) : json(nullptr)},
              {"ledger_entry_hash", optional_json(d.ledger_entry_hash)},
              {"trust", std::string(to_string(d.trust))}};
}

DecisionRecord decision_from_json(const json& j) {
  try {
    DecisionRecord d;
    d.id = j.at("id").get<std::int64_t>();
    auto mode = mode_from_string(j.at("mode").get<std::string>());
    if (!mode) throw Error(ErrorCode::schema_violation, "decision: unknown mode");
    d.mode = *mode;
    d.form_hash = j.at("form_hash").get<std::string>();
    d.verdict = j.at("verdict").get<std::string>() == "approved" ? Verdict::approved : Verdict::rejected;
    d.report = report_from_json(j.at("report"));
    d.rejection_reasons = j.at("rejection_reasons").get<std::vector<std::string>>();
    if (!j.at("ledger_seq").is_null()) d.ledger_seq = j.at("ledger_seq").get<std::int64_t>();
    d.ledger_entry_hash = optional_string(j.at("ledger_entry_hash"));
    auto trust = trust_from_string(j.at("trust").get<std::string>());
    if (!trust) throw Error(ErrorCode::schema_violation, "decision: unknown trust level");
    d.trust = *trust;
    return d;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema_violation, std::string("decision: ") + e.what());
  }
}

json ledger_entry_to_json(const LedgerEntry& e) {
  return json{{"seq", e.seq},
              {"old_hash", optional_json(e.old_hash)},
              {"new_hash", e.new_hash},
              {"diff", diff_to_json(e.diff)},
              {"evidence", value_to_json(e.evidence)},
              {"decision_id", e.decision_id},
              {"prev_entry_hash", e.prev_entry_hash}};
}

LedgerEntry ledger_entry_from_json(const json& j) {
  try {
    if (!j.is_object() || j.size() != 7) throw Error(ErrorCode::schema_violation, "ledger entry: wrong keys");
    LedgerEntry e;
    e.seq = j.at("seq").get<std::int64_t>();
    e.old_hash = optional_string(j.at("old_hash"));
    e.new_hash = j.at("new_hash").get<std::string>();
    e.diff = diff_from_json(j.at("diff"));
    e.evidence = value_from_json(j.at("evidence"));
    e.decision_id = j.at("decision_id").get<std::int64_t>();
    e.prev_entry_hash = j.at("prev_entry_hash").get<std::string>();
    return e;
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::schema_violation, std::string("ledger entry: ") + ex.what());
  }
}

std::string canonical_line(const LedgerEntry& e) { return ledger_entry_to_json(e).dump(); }

RegistryFiles RegistryFiles::beside(const std::filesystem::path& ledger) {
  return RegistryFiles{ledger.string() + ".decisions", ledger, ledger.string() + ".machines"};
}

std::string describe_form(const Form& f, const InspectionReport& report) {
  std::string out = std::string(keyword(f.kind())) + " " + f.name().value_or("<unnamed>") + "\n";
  out += "steps: " + std::to_string(count_steps(f));
  auto types = step_types(f);
  if (!types.empty()) {
    out += " (";
    bool first = true;
    for (const auto& [k, n] : types) {
      if (!first) out += ", ";
      first = false;
      out += std::string(keyword(k)) + ": " + std::to_string(n);
    }
    out += ")";
  }
  out += "\nrequired caps: ";
  if (report.required_caps.empty()) out += "(none)";
  bool first = true;
  for (const auto& a : report.required_caps) {
    if (!first) out += ", ";
    first = false;
    out += a.str();
  }
  out += "\nestimated cost: " + std::to_string(report.estimated_cost) + "\n";
  return out;
}

Registry::Registry() = default;

Registry::Registry(RegistryFiles files, bool writable) : files_(std::move(files)), writable_(writable) {
  if (writable_) {
    auto lock_path = files_->ledger.string() + ".lock";
    lock_fd_ = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (lock_fd_ < 0) throw Error(ErrorCode::io_error, "cannot open lock file " + lock_path);
    if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(lock_fd_);
      lock_fd_ = -1;
      throw Error(ErrorCode::io_error, "registry is locked by another writer (" + lock_path + ")");
    }
  }
  try {
    for (const auto& raw : read_lines(files_->ledger)) {
      StoredEntry s{raw, std::nullopt};
      try {
        s.entry = ledger_entry_from_json(json::parse(raw));
      } catch (const std::exception&) {
      }
      ledger_.push_back(std::move(s));
    }
    for (const auto& raw : read_lines(files_->decisions)) {
      try {
        decisions_.push_back(decision_from_json(json::parse(raw)));
      } catch (const std::exception& e) {
        throw Error(ErrorCode::io_error, "unreadable decision record in " + files_->decisions.string());
      }
    }
    for (const auto& raw : read_lines(files_->machines)) {
      try {
        auto j = json::parse(raw);
        Form f = form_from_json(j.at("form"));
        auto h = j.at("form_hash").get<std::string>();
        machines_.insert_or_assign(h, make_machine(f, h, j.at("decision_id").get<std::int64_t>()));
      } catch (const std::exception& e) {
        throw Error(ErrorCode::io_error, "unreadable machine index line in " + files_->machines.string());
      }
    }
  } catch (...) {
    if (lock_fd_ >= 0) ::close(lock_fd_);
    throw;
  }
}

Registry::~Registry() {
  if (lock_fd_ >= 0) ::close(lock_fd_);
}

void Registry::append_line(const std::filesystem::path& p, const std::string& line) {
  std::ofstream out(p, std::ios::binary | std::ios::app);
  out << line << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::io_error, "cannot append to " + p.string());
}

MaterializeResult Registry::materialize(const Form& f, const PolicyContext& pi, TrustLevel trust, Mode mode,
                                        std::optional<Value> evidence, std::optional<std::string> old) {
  std::unique_lock lock(mu_);
  if (files_ && !writable_) throw Error(ErrorCode::io_error, "registry opened read-only");
  if (mode == Mode::propose && !evidence) throw Error(ErrorCode::missing_evidence, "propose needs evidence");
  std::optional<Form> old_form;
  if (old) {
    auto it = machines_.find(*old);
    if (it == machines_.end()) throw Error(ErrorCode::unknown_old_hash, *old);
    old_form = it->second.form;
  }

  MaterializeResult result;
  DecisionRecord& rec = result.record;
  rec.id = static_cast<std::int64_t>(decisions_.size());
  rec.mode = mode;
  rec.report = inspect_form(f, pi, trust);
  rec.form_hash = rec.report.form_hash;
  rec.verdict = rec.report.verdict;
  rec.trust = trust;
  for (const auto& c : rec.report.checks) {
    if (!c.passed) rec.rejection_reasons.push_back(c.name + ": " + c.detail);
  }

  std::optional<StoredEntry> new_entry;
  bool new_machine = false;
  if (rec.verdict == Verdict::approved) {
    if (mode == Mode::describe) {
      result.description = describe_form(f, rec.report);
    } else {
      auto it = machines_.find(rec.form_hash);
      if (it != machines_.end()) {
        result.machine = it->second;
      } else {
        result.machine = make_machine(f, rec.form_hash, rec.id);
        new_machine = true;
      }
    }
    if (mode == Mode::propose) {
      LedgerEntry e;
      e.seq = static_cast<std::int64_t>(ledger_.size());
      e.old_hash = old;
      e.new_hash = rec.form_hash;
      if (old_form) e.diff = diff(*old_form, f);
      e.evidence = *evidence;
      e.decision_id = rec.id;
      e.prev_entry_hash = ledger_.empty() ? zero_digest() : sha256_hex(ledger_.back().raw);
      std::string raw = canonical_line(e);
      rec.ledger_seq = e.seq;
      rec.ledger_entry_hash = sha256_hex(raw);
      result.ledger_seq = e.seq;
      new_entry = StoredEntry{std::move(raw), std::move(e)};
    }
  }

  if (files_) {
    if (new_entry) append_line(files_->ledger, new_entry->raw);
    append_line(files_->decisions, decision_to_json(rec).dump());
    if (new_machine) append_line(files_->machines, machine_index_line(*result.machine).dump());
  }
  if (new_entry) ledger_.push_back(std::move(*new_entry));
  if (new_machine) machines_.emplace(rec.form_hash, *result.machine);
  decisions_.push_back(rec);
  Map payload{{"mode", std::string(to_string(mode))},
              {"form_hash", rec.form_hash},
              {"verdict", std::string(to_string(rec.verdict))}};
  log_.append(Directive{DirectiveKind::materialize, std::move(payload), rec.id}, {});
  return result;
}

std::optional<Machine> Registry::machine(const std::string& form_hash) const {
  std::shared_lock lock(mu_);
  auto it = machines_.find(form_hash);
  if (it == machines_.end()) return std::nullopt;
  return it->second;
}

std::vector<Machine> Registry::machines() const {
  std::shared_lock lock(mu_);
  std::vector<Machine> out;
  for (const auto& [_, m] : machines_) out.push_back(m);
  return out;
}

std::vector<DecisionRecord> Registry::decisions() const {
  std::shared_lock lock(mu_);
  return decisions_;
}

std::optional<DecisionRecord> Registry::decision(std::int64_t id) const {
  std::shared_lock lock(mu_);
  if (id < 0 || static_cast<std::size_t>(id) >= decisions_.size()) return std::nullopt;
  return decisions_[static_cast<std::size_t>(id)];
}

std::vector<LedgerEntry> Registry::ledger() const {
  std::shared_lock lock(mu_);
  std::vector<LedgerEntry> out;
  for (const auto& s : ledger_) {
    if (s.entry) out.push_back(*s.entry);
  }
  return out;
}

std::vector<std::string> Registry::ledger_lines() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (const auto& s : ledger_) out.push_back(s.raw);
  return out;
}

std::vector<Directive> Registry::governance_log() const {
  std::shared_lock lock(mu_);
  return log_.entries();
}

std::size_t Registry::machine_count() const {
  std::shared_lock lock(mu_);
  return machines_.size();
}

std::size_t Registry::decision_count() const {
  std::shared_lock lock(mu_);
  return decisions_.size();
}

std::size_t Registry::ledger_size() const {
  std::shared_lock lock(mu_);
  return ledger_.size();
}

LedgerVerification Registry::verify_ledger() const {
  std::shared_lock lock(mu_);
  // Entry k is sound when it parses, sits at position k, links to the
  // hash of entry k-1, and its own hash matches what the next link (or the
  // decision that wrote it) recorded. The chain breaks at k+1.
  std::map<std::int64_t, std::string> attested;
  for (const auto& d : decisions_) {
    if (d.ledger_seq && d.ledger_entry_hash) attested[*d.ledger_seq] = *d.ledger_entry_hash;
  }
  std::string expected_prev = zero_digest();
  for (std::size_t k = 0; k < ledger_.size(); ++k) {
    const auto& s = ledger_[k];
    const auto seq = static_cast<std::int64_t>(k);
    std::string own = sha256_hex(s.raw);
    std::string problem;
    if (!s.entry) {
      problem = "entry " + std::to_string(k) + " does not parse";
    } else if (s.entry->seq != seq) {
      problem = "entry " + std::to_string(k) + " carries seq " + std::to_string(s.entry->seq);
    } else if (s.entry->prev_entry_hash != expected_prev) {
      problem = "entry " + std::to_string(k) + " does not link to its predecessor";
    } else if (auto it = attested.find(seq); it != attested.end()) {
      if (it->second != own) problem = "entry " + std::to_string(k) + " differs from the hash its decision recorded";
    } else if (k + 1 < ledger_.size()) {
      const auto& next = ledger_[k + 1].entry;
      if (next && next->prev_entry_hash != own) {
        problem = "entry " + std::to_string(k + 1) + " does not link to entry " + std::to_string(k);
      }
    }
    if (!problem.empty()) return {false, seq + 1, problem};
    expected_prev = own;
  }
  return {true, std::nullopt, std::to_string(ledger_.size()) + " entries verified"};
}

AuditResult Registry::audit_no_bypass() const {
  std::shared_lock lock(mu_);
  AuditResult out;
  for (const auto& [h, m] : machines_) {
    bool ok = m.decision_id >= 0 && static_cast<std::size_t>(m.decision_id) < decisions_.size();
    if (ok) {
      const auto& d = decisions_[static_cast<std::size_t>(m.decision_id)];
      ok = d.verdict == Verdict::approved && (d.mode == Mode::eval || d.mode == Mode::propose) &&
           d.form_hash == h && m.form_hash == h && hash(m.form) == h;
    }
    if (!ok) out.orphans.push_back(h);
  }
  out.ok = out.orphans.empty();
  return out;
}

}  // namespace gmeta

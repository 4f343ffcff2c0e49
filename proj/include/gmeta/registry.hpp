#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmeta/directive.hpp"
#include "gmeta/form.hpp"
#include "gmeta/inspector.hpp"

namespace gmeta {

enum class Mode { eval, propose, describe };
std::string_view to_string(Mode m);
std::optional<Mode> mode_from_string(std::string_view s);

struct DecisionRecord {
  std::int64_t id = 0;
  Mode mode = Mode::eval;
  std::string form_hash;
  Verdict verdict = Verdict::rejected;
  InspectionReport report;
  /// "check-name: detail" per failed check; empty iff approved.
  std::vector<std::string> rejection_reasons;
  std::optional<std::int64_t> ledger_seq;
  /// SHA-256 of the ledger line written by this decision, so the newest
  /// entry is covered by the chain check too.
  std::optional<std::string> ledger_entry_hash;
  TrustLevel trust = TrustLevel::untrusted;

  bool operator==(const DecisionRecord&) const = default;
};

struct Machine {
  std::string form_hash;
  Form form;
  CapSet authorized_caps;
  Form reflect_constant;
  std::int64_t decision_id = 0;
};

struct LedgerEntry {
  std::int64_t seq = 0;
  std::optional<std::string> old_hash;
  std::string new_hash;
  FormDiff diff;
  Value evidence;
  std::int64_t decision_id = 0;
  std::string prev_entry_hash;

  bool operator==(const LedgerEntry&) const = default;
};

nlohmann::json decision_to_json(const DecisionRecord& d);
DecisionRecord decision_from_json(const nlohmann::json& j);
nlohmann::json ledger_entry_to_json(const LedgerEntry& e);
LedgerEntry ledger_entry_from_json(const nlohmann::json& j);
/// Sorted-key compact JSON; the bytes hashed by the chain.
std::string canonical_line(const LedgerEntry& e);

struct MaterializeResult {
  DecisionRecord record;
  std::optional<Machine> machine;         // eval and propose
  std::optional<std::int64_t> ledger_seq;  // propose
  std::optional<std::string> description;  // describe

  bool approved() const { return record.verdict == Verdict::approved; }
  std::vector<std::string> failed_checks() const { return record.report.failed_checks(); }
};

struct LedgerVerification {
  bool ok = true;
  std::optional<std::int64_t> first_broken_seq;
  std::string detail;
};

struct AuditResult {
  bool ok = true;
  std::vector<std::string> orphans;
};

/// Persistent layout: JSON-lines files for decisions, ledger entries and the
/// machine index (hash, decision id and the form itself).
struct RegistryFiles {
  std::filesystem::path decisions;
  std::filesystem::path ledger;
  std::filesystem::path machines;

  /// `<ledger>.decisions` and `<ledger>.machines` next to the ledger.
  static RegistryFiles beside(const std::filesystem::path& ledger);
};

/// Machines, decisions and the evolution ledger. materialize is the only
/// way in; writers are serialized and readers see whole appends.
class Registry {
 public:
  Registry();
  /// Loads persisted state; when `writable`, takes an exclusive advisory
  /// lock (`<ledger>.lock`, fail-fast) and appends every change to disk.
  explicit Registry(RegistryFiles files, bool writable = true);
  ~Registry();
  Registry(const Registry&) = delete;
  Registry& operator=(const Registry&) = delete;

  /// Throws missing-evidence (propose without evidence) and unknown-old-hash
  /// before anything is recorded. Otherwise records exactly one decision.
  MaterializeResult materialize(const Form& f, const PolicyContext& pi, TrustLevel trust, Mode mode,
                                std::optional<Value> evidence = std::nullopt,
                                std::optional<std::string> old = std::nullopt);

  std::optional<Machine> machine(const std::string& form_hash) const;
  std::vector<Machine> machines() const;
  std::vector<DecisionRecord> decisions() const;
  std::optional<DecisionRecord> decision(std::int64_t id) const;
  /// Parsed entries; lines that no longer parse are skipped.
  std::vector<LedgerEntry> ledger() const;
  std::vector<std::string> ledger_lines() const;
  std::vector<Directive> governance_log() const;

  std::size_t machine_count() const;
  std::size_t decision_count() const;
  std::size_t ledger_size() const;

  LedgerVerification verify_ledger() const;
  AuditResult audit_no_bypass() const;

 private:
  struct StoredEntry {
    std::string raw;
    std::optional<LedgerEntry> entry;
  };

  void append_line(const std::filesystem::path& p, const std::string& line);

  mutable std::shared_mutex mu_;
  std::map<std::string, Machine> machines_;
  std::vector<DecisionRecord> decisions_;
  std::vector<StoredEntry> ledger_;
  DirectiveLog log_;
  std::optional<RegistryFiles> files_;
  bool writable_ = true;
  int lock_fd_ = -1;

  friend struct RegistryTestAccess;
};

std::string describe_form(const Form& f, const InspectionReport& report);

}  // namespace gmeta

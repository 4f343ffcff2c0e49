#include "gmeta/testing/registry_access.hpp"

#include <mutex>

#include "gmeta/json_codec.hpp"

namespace gmeta {

void RegistryTestAccess::inject_machine(Registry& r, Machine m) {
  std::unique_lock lock(r.mu_);
  auto key = m.form_hash;
  r.machines_.insert_or_assign(std::move(key), std::move(m));
}

void RegistryTestAccess::overwrite_ledger_line(Registry& r, std::size_t index, std::string raw) {
  std::unique_lock lock(r.mu_);
  auto& s = r.ledger_.at(index);
  s.raw = std::move(raw);
  try {
    s.entry = ledger_entry_from_json(parse_json(s.raw));
  } catch (const std::exception&) {
    s.entry.reset();
  }
}

}  // namespace gmeta

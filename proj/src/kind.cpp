#include "gmeta/kind.hpp"

#include <algorithm>
#include <array>

namespace gmeta {
namespace {

struct KindInfo {
  Kind kind;
  std::string_view word;
  int level;
};

constexpr std::array<KindInfo, 21> kKinds{{
    {Kind::machine, "machine", 0},
    {Kind::provides, "provides", 1},
    {Kind::requires_, "requires", 1},
    {Kind::implements, "implements", 1},
    {Kind::governance, "governance", 1},
    {Kind::state, "state", 1},
    {Kind::constants, "constants", 1},
    {Kind::tests, "tests", 1},
    {Kind::metadata, "metadata", 1},
    {Kind::compute, "compute", 2},
    {Kind::ask, "ask", 2},
    {Kind::test, "test", 2},
    {Kind::inputs, "inputs", 3},
    {Kind::outputs, "outputs", 3},
    {Kind::task, "task", 3},
    {Kind::returns, "returns", 3},
    {Kind::evidence, "evidence", 3},
    {Kind::policies, "policies", 3},
    {Kind::limits, "limits", 3},
    {Kind::models, "models", 3},
    {Kind::expect, "expect", 4},
}};

constexpr std::array<Kind, 21> kAllKinds = [] {
  std::array<Kind, 21> out{};
  for (std::size_t i = 0; i < kKinds.size(); ++i) out[i] = kKinds[i].kind;
  return out;
}();

constexpr std::array kMachineChildren{Kind::provides,   Kind::requires_, Kind::implements,
                                      Kind::governance, Kind::state,     Kind::constants,
                                      Kind::tests,      Kind::metadata};
constexpr std::array kInterfaceChildren{Kind::inputs, Kind::outputs};
constexpr std::array kImplementsChildren{Kind::compute, Kind::ask};
constexpr std::array kGovernanceChildren{Kind::policies, Kind::limits, Kind::models};
constexpr std::array kAskChildren{Kind::task, Kind::returns, Kind::evidence};
constexpr std::array kTestsChildren{Kind::test};
constexpr std::array kTestChildren{Kind::expect};

const KindInfo& info(Kind kind) { return kKinds[static_cast<std::size_t>(kind)]; }

}  // namespace

std::string_view keyword(Kind kind) { return info(kind).word; }

int level(Kind kind) { return info(kind).level; }

std::optional<Kind> kind_from_keyword(std::string_view word) {
  for (const auto& k : kKinds) {
    if (k.word == word) return k.kind;
  }
  return std::nullopt;
}

bool requires_name(Kind kind) {
  return kind == Kind::machine || kind == Kind::compute || kind == Kind::ask;
}

bool is_step(Kind kind) { return kind == Kind::compute || kind == Kind::ask; }

std::span<const Kind> legal_children(Kind parent) {
  switch (parent) {
    case Kind::machine: return kMachineChildren;
    case Kind::provides:
    case Kind::requires_: return kInterfaceChildren;
    case Kind::implements: return kImplementsChildren;
    case Kind::governance: return kGovernanceChildren;
    case Kind::ask: return kAskChildren;
    case Kind::tests: return kTestsChildren;
    case Kind::test: return kTestChildren;
    default: return {};
  }
}

bool is_legal_child(Kind parent, Kind child) {
  auto allowed = legal_children(parent);
  return std::find(allowed.begin(), allowed.end(), child) != allowed.end();
}

std::span<const Kind> all_kinds() { return kAllKinds; }

}  // namespace gmeta

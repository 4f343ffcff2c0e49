#pragma once

#include <optional>
#include <span>
#include <string_view>

namespace gmeta {

// Closed keyword set. Level 0 is the machine, level 1 the eight section
// verbs, level 2 steps, level 3 configuration blocks, level 4 assertions.
enum class Kind {
  machine,
  // sections
  provides,
  requires_,
  implements,
  governance,
  state,
  constants,
  tests,
  metadata,
  // steps
  compute,
  ask,
  test,
  // configuration
  inputs,
  outputs,
  task,
  returns,
  evidence,
  policies,
  limits,
  models,
  // assertions
  expect,
};

std::string_view keyword(Kind kind);
std::optional<Kind> kind_from_keyword(std::string_view word);
int level(Kind kind);

bool requires_name(Kind kind);
bool is_step(Kind kind);

/// Kinds permitted as direct children of `parent`.
std::span<const Kind> legal_children(Kind parent);
bool is_legal_child(Kind parent, Kind child);

std::span<const Kind> all_kinds();

}  // namespace gmeta

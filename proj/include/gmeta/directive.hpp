#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "gmeta/form.hpp"

namespace gmeta {

enum class DirectiveKind { materialize, model_invoke, machine_call };

std::string_view to_string(DirectiveKind kind);

struct Directive {
  DirectiveKind kind;
  Map payload;
  std::optional<std::int64_t> decision;
};

class Registry;
class Interpreter;

/// Append-only record of governed effects. Only the registry (materialize)
/// and the step interpreter (model-invoke, machine-call) hold the key
/// needed to append, so pure code can read a log but never grow it.
class DirectiveLog {
 public:
  class EmitKey {
    EmitKey() = default;
    friend class Registry;
    friend class Interpreter;
  };

  void append(Directive d, EmitKey) { entries_.push_back(std::move(d)); }

  const std::vector<Directive>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<Directive> entries_;
};

}  // namespace gmeta

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rtmtest/model.hpp"
#include "rtmtest/property.hpp"

namespace rtmtest {

// ---------------------------------------------------------------------------
// The runtime-model simulation automaton
//
// States plus weighted transitions stand in for the combined behavior of the
// adaptable software, environment, monitor and execute steps. A transition
// carries a generation action (the fault it injects when the simulator walks
// it) and an acceptance guard (the check a recorded snapshot must pass for
// trace membership). Guards are phase-tagged: every outgoing transition of a
// state consumes the same snapshot phase.
// ---------------------------------------------------------------------------

/// Identifier of the pseudo-random scheme fixed in every automaton and trace
/// file: raw mt19937_64 output scaled to [0,1) with 53 bits, cumulative-weight
/// transition choice, modulo-reduced index draws for RANDOM targets.
inline constexpr const char* kGeneratorId = "mt19937_64-u53";

enum class FaultKind {
  CrashRemove,
  ExceptionBurst,
  LifecycleFlip,
  RepeatLast,
  NoOp,
  ReplaySnapshot,  // regression branches re-emit a recorded snapshot
};

const char* to_string(FaultKind kind);
FaultKind fault_kind_from_string(std::string_view s);

struct FaultAction {
  FaultKind kind = FaultKind::NoOp;
  // Component id, or "RANDOM" for a seeded pick among present components.
  std::string target;
  std::map<std::string, std::string> parameters;
  // ReplaySnapshot only: the exact model to re-emit.
  std::optional<RTM> replay_model;

  bool operator==(const FaultAction&) const = default;
};

struct Guard {
  Phase phase = Phase::Monitored;
  // Either a non-temporal predicate expression or an exact-model match.
  PropertyPtr expr;            // set when textual
  std::string expr_text;       // canonical source of expr
  std::optional<RTM> exact;    // set for exact-match guards

  bool accepts(const Snapshot& snapshot, const EvalContext& ctx) const;
};

struct SimState {
  std::string id;
  bool terminal = false;
};

struct SimTransition {
  std::string from;
  std::string to;
  FaultAction action;
  Guard guard;
  double weight = 1.0;
};

struct SimAutomaton {
  std::string id;
  std::string initial;
  std::vector<SimState> states;
  std::vector<SimTransition> transitions;
  RTM template_model;  // ground-truth template the campaign starts from

  // Metric emulation rule: response-time = base + per_connector * degree.
  double metric_base = 10.0;
  double metric_per_connector = 5.0;

  const SimState* find_state(const std::string& id) const;
  std::vector<const SimTransition*> outgoing(const std::string& state_id) const;

  /// Phases any guard speaks about (drives default trace projection).
  std::set<Phase> guard_phases() const;
};

/// Structural validation: initial state exists, transition endpoints exist,
/// weights are positive, every non-terminal state with outgoing transitions
/// consumes a single phase, guard expressions are non-temporal.
void validate_automaton(const SimAutomaton& automaton);

json automaton_to_json(const SimAutomaton& automaton);
SimAutomaton automaton_from_json(const json& j);
SimAutomaton load_automaton(const std::filesystem::path& path);
void save_automaton(const SimAutomaton& automaton, const std::filesystem::path& path);

}  // namespace rtmtest

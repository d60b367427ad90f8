#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rtmtest/compare.hpp"
#include "rtmtest/mape.hpp"

namespace rtmtest {

// ---------------------------------------------------------------------------
// Finite-trace properties
//
// Property expressions are written in a small textual grammar, e.g.
//
//   atMostConsecutive(violated("no-dangling-required"), 2)
//   always(present("Authentication") @ MONITORED)
//   eventually(annotated("MISSING_COMPONENT") @ ANALYZED)
//
// see docs/property-grammar.md for the EBNF and the evaluation semantics.
// A property whose atoms never filter on ANALYZED is a black-box property;
// one that does inspects the grey-box part of a trace.
// ---------------------------------------------------------------------------

struct TraceProperty;
using PropertyPtr = std::shared_ptr<const TraceProperty>;

struct TraceProperty {
  enum class Kind { Atom, Not, And, Or, Implies, Always, Eventually, AtMostConsecutive };

  Kind kind = Kind::Atom;

  // Atom
  std::string predicate;
  std::vector<std::string> args;
  std::optional<Phase> phase_filter;

  // Composite
  PropertyPtr left;
  PropertyPtr right;
  int bound = 0;  // AtMostConsecutive

  static PropertyPtr atom(std::string predicate, std::vector<std::string> args = {},
                          std::optional<Phase> phase = std::nullopt);
  static PropertyPtr negate(PropertyPtr p);
  static PropertyPtr conj(PropertyPtr a, PropertyPtr b);
  static PropertyPtr disj(PropertyPtr a, PropertyPtr b);
  static PropertyPtr implies(PropertyPtr a, PropertyPtr b);
  static PropertyPtr always(PropertyPtr p);
  static PropertyPtr eventually(PropertyPtr p);
  static PropertyPtr at_most_consecutive(PropertyPtr p, int bound);
};

/// Parses one property expression; errors report line and column.
PropertyPtr parse_property(std::string_view text);

/// Canonical text form; parse_property(property_to_string(p)) is p again.
std::string property_to_string(const TraceProperty& p);

bool has_temporal_operator(const TraceProperty& p);

/// Phases the property's atoms speak about; atoms without a filter speak
/// about every phase.
std::set<Phase> relevant_phases(const TraceProperty& p);

struct WitnessWindow {
  std::size_t first = 0;
  std::size_t last = 0;  // inclusive, trace indices

  bool operator==(const WitnessWindow&) const = default;
};

struct PropertyVerdict {
  bool holds = true;
  std::optional<WitnessWindow> witness;  // earliest falsifying window
};

struct EvalContext {
  const ConstraintRegistry* registry = nullptr;  // nullptr means builtins

  const ConstraintRegistry& effective_registry() const;
};

/// Finite-trace evaluation. Temporal operators quantify over the positions
/// whose phase is relevant to their body; eventually over an empty domain is
/// false. A non-temporal top-level formula is checked at every relevant
/// position (implicit always).
PropertyVerdict evaluate(const TraceProperty& property, const Trace& trace,
                         const EvalContext& ctx = {});

/// Single-snapshot evaluation of a non-temporal expression (used for
/// automaton guards).
bool evaluate_state(const TraceProperty& property, const Snapshot& snapshot,
                    const EvalContext& ctx = {});

}  // namespace rtmtest

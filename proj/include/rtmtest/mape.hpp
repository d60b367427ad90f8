#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rtmtest/compare.hpp"
#include "rtmtest/model.hpp"

namespace rtmtest {

// ---------------------------------------------------------------------------
// Phase-labeled snapshots and traces
//
// One feedback iteration produces up to three model states; the snapshot
// sequence of a trace follows the pattern
//   MONITORED(0); ANALYZED(0); PLANNED(0); MONITORED(1); ...
// with phases optionally omitted (black-box traces drop ANALYZED).
// ---------------------------------------------------------------------------

enum class Phase { Monitored, Analyzed, Planned };

const char* to_string(Phase p);
Phase phase_from_string(std::string_view s);

struct Snapshot {
  Phase phase = Phase::Monitored;
  int iteration = 0;
  RTM model;

  bool operator==(const Snapshot&) const = default;
};

enum class TraceStorage { Full, Delta };

struct Trace {
  std::string id;
  std::optional<std::uint64_t> seed;  // present for simulator-generated traces
  std::vector<Snapshot> snapshots;

  // Serialization preference: delta mode stores snapshot 1..n as diffs
  // against the previous snapshot.
  TraceStorage storage = TraceStorage::Full;

  // Campaign provenance, carried so a recorded trace can be replayed.
  std::string engine;                // registered engine name, may be empty
  std::optional<json> automaton_doc; // embedded automaton document
  std::optional<int> iterations;

  bool operator==(const Trace&) const = default;
};

/// Appends a deep-copied snapshot and returns the extended trace. The
/// iteration index is taken from `iteration` when given, otherwise inferred:
/// a phase later than the last snapshot's continues the current iteration,
/// anything else starts the next one. Appending out of order (iteration or
/// phase not strictly increasing) is an order-violation.
Trace record(Trace trace, Phase phase, RTM model, std::optional<int> iteration = std::nullopt);

/// Keeps only snapshots whose phase is in the set, preserving order.
Trace project(const Trace& trace, const std::set<Phase>& phases);

// Trace file format: UTF-8 JSON header (id, seed, storage, provenance)
// followed by ordered snapshot records carrying either a full model or a
// diff against the previous snapshot.
json trace_to_json(const Trace& trace);
Trace trace_from_json(const json& j);
std::string serialize_trace(const Trace& trace);
Trace parse_trace(std::string_view bytes);
Trace load_trace(const std::filesystem::path& path);
void save_trace(const Trace& trace, const std::filesystem::path& path);

/// Snapshot-wise equality (id, seed and snapshot contents; storage mode and
/// provenance are transport details).
bool traces_equal(const Trace& a, const Trace& b);

// ---------------------------------------------------------------------------
// Step contracts
// ---------------------------------------------------------------------------

/// Stand-in for the system under adaptation. Execute steps effect it and
/// monitor steps sense it; the test adapter may write to its state directly.
class AdaptableSoftware {
 public:
  virtual ~AdaptableSoftware() = default;

  /// Restores the fixed initial state. Handles that cannot reset throw
  /// setup-error.
  virtual void reset() = 0;

  /// Current architecture as the software itself would expose it.
  virtual RTM state() const = 0;

  /// Replaces the architecture (the effect channel used by execute steps).
  virtual void apply(const RTM& model) = 0;
};

/// The four MAPE roles. analyze and plan are pure functions of their input
/// model; monitor and execute touch only the provided software handle. A
/// bundle may leave roles unset when a harness only exercises the others.
struct StepFunctions {
  std::function<RTM(const RTM&)> analyze;
  std::function<RTM(const RTM&)> plan;
  std::function<RTM(AdaptableSoftware&)> monitor;
  std::function<void(const RTM&, AdaptableSoftware&)> execute;
};

/// True when `out` differs from `in` at most in annotations and metrics —
/// the conformance condition for analyze implementations.
bool analyze_preserves_structure(const RTM& in, const RTM& out);

}  // namespace rtmtest

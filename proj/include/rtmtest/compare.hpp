#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "rtmtest/model.hpp"

namespace rtmtest {

// ---------------------------------------------------------------------------
// Matching, diffing and equality
//
// Correspondence between two models is by stable element id, never by
// structural isomorphism. An empty Diff is the definition of model equality.
// ---------------------------------------------------------------------------

enum class ElementCategory { Model, Component, Connector, Annotation };

const char* to_string(ElementCategory cat);

struct ElementDescriptor {
  ElementCategory category = ElementCategory::Component;
  std::string id;  // annotations use "KIND@target"
  json value;      // full element value, enough to re-create it

  bool operator==(const ElementDescriptor&) const = default;
};

struct FieldChange {
  std::string element_id;  // "" refers to the model itself
  std::string field;
  json old_value;
  json new_value;

  bool operator==(const FieldChange&) const = default;
};

struct Diff {
  std::vector<ElementDescriptor> added;    // sorted by (category, id)
  std::vector<ElementDescriptor> removed;  // sorted by (category, id)
  std::vector<FieldChange> changed;        // sorted by (element_id, field)

  bool empty() const { return added.empty() && removed.empty() && changed.empty(); }
  std::size_t size() const { return added.size() + removed.size() + changed.size(); }
};

json diff_to_json(const Diff& d);
Diff diff_from_json(const json& j);

/// Field categories a comparison may ignore. PlannedActions covers the
/// engine's bookkeeping annotations (PLANNED_ACTION and FAILURE_HISTORY), so
/// a planned model can be compared against a plain structural oracle.
enum class IgnoreField { Annotations, Metrics, PlannedActions };
using IgnoreSet = std::set<IgnoreField>;

const char* to_string(IgnoreField f);
IgnoreField ignore_field_from_string(std::string_view s);

Diff diff(const RTM& left, const RTM& right, const IgnoreSet& ignore = {});
bool equal(const RTM& left, const RTM& right, const IgnoreSet& ignore = {});

/// Re-applies a diff produced by diff(base, target) onto base, yielding a
/// model equal to target. Any mismatch with base is an inconsistent-diff
/// error.
RTM apply_diff(RTM base, const Diff& d);

// ---------------------------------------------------------------------------
// Constraint checking
// ---------------------------------------------------------------------------

struct ConstraintViolation {
  std::string constraint;
  std::string target;
  std::string message;

  bool operator==(const ConstraintViolation&) const = default;
  auto operator<=>(const ConstraintViolation&) const = default;
};

using ConstraintFn = std::function<std::vector<ConstraintViolation>(const RTM&)>;
using PredicateFn = std::function<bool(const RTM&, const std::vector<std::string>&)>;

/// Named constraints plus named snapshot predicates (used by trace properties
/// and automaton guards). Starts from the built-in set:
///
///   critical-components-present  every expected critical component exists and
///                                is STARTED; without an expected set, every
///                                critical-flagged component must be STARTED
///   no-dangling-required         every required interface of a STARTED
///                                component is bound by a connector
///   lifecycle-states-legal       no connector endpoint is UNDEPLOYED
///   connector-endpoints-exist    connector endpoints reference existing
///                                interfaces (holds by construction; re-checked
///                                for models from foreign producers)
class ConstraintRegistry {
 public:
  static ConstraintRegistry builtins();

  /// Enables removal detection for critical-components-present.
  void expect_critical(std::vector<std::string> ids);
  const std::vector<std::string>& expected_critical() const { return expected_critical_; }

  void register_constraint(const std::string& name, ConstraintFn fn);
  void register_predicate(const std::string& name, PredicateFn fn);

  bool has_constraint(const std::string& name) const { return constraints_.count(name) != 0; }
  bool has_predicate(const std::string& name) const { return predicates_.count(name) != 0; }
  std::vector<ConstraintViolation> run_constraint(const std::string& name, const RTM& model) const;
  bool eval_predicate(const std::string& name, const RTM& model,
                      const std::vector<std::string>& args) const;
  std::set<std::string> constraint_names() const;

 private:
  std::map<std::string, ConstraintFn> constraints_;
  std::map<std::string, PredicateFn> predicates_;
  std::vector<std::string> expected_critical_;
};

/// Runs the named constraints; the result is sorted by (constraint, target)
/// and empty exactly when the model is a valid architecture under them.
std::vector<ConstraintViolation> check_constraints(
    const RTM& model, const std::set<std::string>& constraints,
    const ConstraintRegistry& registry = ConstraintRegistry::builtins());

std::vector<ConstraintViolation> check_all_builtin(
    const RTM& model, const ConstraintRegistry& registry = ConstraintRegistry::builtins());

/// Checks that `after` is a well-defined adaptation of `before`:
/// lifecycle changes follow the legal transition relation, additions enter in
/// DEPLOYED (unless a PLANNED_ACTION REDEPLOY/REPLACE/START accounts for the
/// collapsed deploy-and-start), removals come from UNDEPLOYED, are injected
/// faults, or are covered by a PLANNED_ACTION REPLACE.
std::vector<ConstraintViolation> check_adaptation_well_defined(const RTM& before, const RTM& after);

}  // namespace rtmtest

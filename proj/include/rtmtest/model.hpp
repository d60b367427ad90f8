#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rtmtest/error.hpp"

namespace rtmtest {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Architectural runtime model (RTM)
//
// The RTM is the shared knowledge artifact every feedback-loop step reads and
// writes: a component architecture plus annotations and numeric metrics.
// Values are immutable once built; every edit goes through mutate() and
// returns a fresh model.
// ---------------------------------------------------------------------------

enum class Lifecycle { Deployed, Started, Stopped, Undeployed };

const char* to_string(Lifecycle lc);
Lifecycle lifecycle_from_string(std::string_view s);

/// Legal lifecycle transitions:
///   DEPLOYED -> STARTED -> STOPPED -> {STARTED, UNDEPLOYED}
/// UNDEPLOYED is terminal; components enter in DEPLOYED and leave from
/// UNDEPLOYED (or by crash).
bool lifecycle_transition_legal(Lifecycle from, Lifecycle to);

enum class AnnotationKind {
  MissingComponent,
  ExceptionFailure,
  LifecycleFailure,
  RepeatedFailure,
  PlannedAction,
  FailureHistory,
};

const char* to_string(AnnotationKind kind);
AnnotationKind annotation_kind_from_string(std::string_view s);

struct Component {
  std::string id;
  std::string type;
  Lifecycle lifecycle = Lifecycle::Deployed;
  std::set<std::string> provided;
  std::set<std::string> required;
  bool critical = false;
  // Marks elements contributed by a test adapter (erroneous-input faults).
  bool injected = false;

  bool operator==(const Component&) const = default;
};

struct Connector {
  std::string id;
  std::string from;            // component id owning the required interface
  std::string required_iface;  // interface name on `from`
  std::string to;              // component id owning the provided interface
  std::string provided_iface;  // interface name on `to`

  bool operator==(const Connector&) const = default;
};

struct Annotation {
  AnnotationKind kind = AnnotationKind::MissingComponent;
  std::string target;  // element id, or the model id for architecture-wide notes
  std::map<std::string, std::string> payload;

  bool operator==(const Annotation&) const = default;

  /// Fault-injection marker used by the execute+monitor harness.
  bool injected() const {
    auto it = payload.find("injected");
    return it != payload.end() && it->second == "true";
  }
};

// Annotations are keyed by (kind, target); at most one per key in a model.
using AnnotationKey = std::pair<AnnotationKind, std::string>;
using MetricMap = std::map<std::string, double>;

class RTM {
 public:
  RTM() = default;
  explicit RTM(std::string id) : id_(std::move(id)) {}

  const std::string& id() const { return id_; }
  const std::map<std::string, Component>& components() const { return components_; }
  const std::map<std::string, Connector>& connectors() const { return connectors_; }
  const std::map<AnnotationKey, Annotation>& annotations() const { return annotations_; }
  const std::map<std::string, MetricMap>& metrics() const { return metrics_; }

  bool has_component(const std::string& id) const { return components_.count(id) != 0; }
  const Component* find_component(const std::string& id) const;
  const Connector* find_connector(const std::string& id) const;
  const Annotation* find_annotation(AnnotationKind kind, const std::string& target) const;

  /// Ids of all connectors with either endpoint at `component_id`.
  std::vector<std::string> connectors_touching(const std::string& component_id) const;

  double metric_or(const std::string& element, const std::string& name, double fallback) const;

  bool operator==(const RTM&) const = default;

 private:
  std::string id_;
  std::map<std::string, Component> components_;
  std::map<std::string, Connector> connectors_;
  std::map<AnnotationKey, Annotation> annotations_;
  std::map<std::string, MetricMap> metrics_;

  friend RTM mutate(RTM model, const struct Edit& edit);
  friend RTM apply_diff(RTM base, const struct Diff& d);
};

// ---------------------------------------------------------------------------
// Edits
// ---------------------------------------------------------------------------

struct AddComponent {
  Component component;
};
struct RemoveComponent {
  std::string id;
};
struct SetLifecycle {
  std::string id;
  Lifecycle to;
};
struct AddConnector {
  Connector connector;
};
struct RemoveConnector {
  std::string id;
};
/// Upserts by (kind, target). Target-existence rules depend on the kind:
/// EXCEPTION_FAILURE and LIFECYCLE_FAILURE assert a property of a present
/// component and require it to exist; MISSING_COMPONENT, REPEATED_FAILURE and
/// PLANNED_ACTION may reference absent elements (that is their point);
/// FAILURE_HISTORY must target the architecture itself (the model id).
struct Annotate {
  Annotation annotation;
};
struct RemoveAnnotation {
  AnnotationKind kind;
  std::string target;
};
struct SetMetric {
  std::string element;
  std::string name;
  double value;
};
struct RemoveMetric {
  std::string element;
  std::string name;
};

struct Edit {
  std::variant<AddComponent, RemoveComponent, SetLifecycle, AddConnector, RemoveConnector,
               Annotate, RemoveAnnotation, SetMetric, RemoveMetric>
      op;
};

RTM create_rtm(const std::string& id);

/// Returns a new model with the edit applied; the input value is unchanged.
/// Removing a component also removes its connectors, its metrics, and any
/// annotation that strictly requires the component to exist.
RTM mutate(RTM model, const Edit& edit);

// ---------------------------------------------------------------------------
// Canonical serialization
//
// UTF-8 JSON, keys in fixed order (id, components, connectors, annotations,
// metrics), arrays sorted ascending by element id. Equal models serialize to
// byte-identical output.
// ---------------------------------------------------------------------------

json model_to_json(const RTM& model);
RTM model_from_json(const json& j);

std::string serialize(const RTM& model);
RTM deserialize(std::string_view bytes);

RTM load_model(const std::filesystem::path& path);
void save_model(const RTM& model, const std::filesystem::path& path);

}  // namespace rtmtest

#include "rtmtest/model.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace rtmtest {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::not_found: return "not-found";
    case ErrorCode::duplicate_id: return "duplicate-id";
    case ErrorCode::dangling_endpoint: return "dangling-endpoint";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::inconsistent_diff: return "inconsistent-diff";
    case ErrorCode::unknown_constraint: return "unknown-constraint";
    case ErrorCode::order_violation: return "order-violation";
    case ErrorCode::unsplittable_input: return "unsplittable-input";
    case ErrorCode::setup_error: return "setup-error";
    case ErrorCode::not_replayable: return "not-replayable";
    case ErrorCode::unknown_predicate: return "unknown-predicate";
    case ErrorCode::malformed_automaton: return "malformed-automaton";
    case ErrorCode::io_error: return "io-error";
  }
  return "unknown-error";
}

const char* to_string(Lifecycle lc) {
  switch (lc) {
    case Lifecycle::Deployed: return "DEPLOYED";
    case Lifecycle::Started: return "STARTED";
    case Lifecycle::Stopped: return "STOPPED";
    case Lifecycle::Undeployed: return "UNDEPLOYED";
  }
  return "?";
}

Lifecycle lifecycle_from_string(std::string_view s) {
  if (s == "DEPLOYED") return Lifecycle::Deployed;
  if (s == "STARTED") return Lifecycle::Started;
  if (s == "STOPPED") return Lifecycle::Stopped;
  if (s == "UNDEPLOYED") return Lifecycle::Undeployed;
  throw Error(ErrorCode::parse_error, "unknown lifecycle state '" + std::string(s) + "'");
}

bool lifecycle_transition_legal(Lifecycle from, Lifecycle to) {
  switch (from) {
    case Lifecycle::Deployed: return to == Lifecycle::Started;
    case Lifecycle::Started: return to == Lifecycle::Stopped;
    case Lifecycle::Stopped: return to == Lifecycle::Started || to == Lifecycle::Undeployed;
    case Lifecycle::Undeployed: return false;
  }
  return false;
}

const char* to_string(AnnotationKind kind) {
  switch (kind) {
    case AnnotationKind::MissingComponent: return "MISSING_COMPONENT";
    case AnnotationKind::ExceptionFailure: return "EXCEPTION_FAILURE";
    case AnnotationKind::LifecycleFailure: return "LIFECYCLE_FAILURE";
    case AnnotationKind::RepeatedFailure: return "REPEATED_FAILURE";
    case AnnotationKind::PlannedAction: return "PLANNED_ACTION";
    case AnnotationKind::FailureHistory: return "FAILURE_HISTORY";
  }
  return "?";
}

AnnotationKind annotation_kind_from_string(std::string_view s) {
  if (s == "MISSING_COMPONENT") return AnnotationKind::MissingComponent;
  if (s == "EXCEPTION_FAILURE") return AnnotationKind::ExceptionFailure;
  if (s == "LIFECYCLE_FAILURE") return AnnotationKind::LifecycleFailure;
  if (s == "REPEATED_FAILURE") return AnnotationKind::RepeatedFailure;
  if (s == "PLANNED_ACTION") return AnnotationKind::PlannedAction;
  if (s == "FAILURE_HISTORY") return AnnotationKind::FailureHistory;
  throw Error(ErrorCode::parse_error, "unknown annotation kind '" + std::string(s) + "'");
}

const Component* RTM::find_component(const std::string& id) const {
  auto it = components_.find(id);
  return it == components_.end() ? nullptr : &it->second;
}

const Connector* RTM::find_connector(const std::string& id) const {
  auto it = connectors_.find(id);
  return it == connectors_.end() ? nullptr : &it->second;
}

const Annotation* RTM::find_annotation(AnnotationKind kind, const std::string& target) const {
  auto it = annotations_.find({kind, target});
  return it == annotations_.end() ? nullptr : &it->second;
}

std::vector<std::string> RTM::connectors_touching(const std::string& component_id) const {
  std::vector<std::string> out;
  for (const auto& [id, c] : connectors_) {
    if (c.from == component_id || c.to == component_id) out.push_back(id);
  }
  return out;
}

double RTM::metric_or(const std::string& element, const std::string& name, double fallback) const {
  auto it = metrics_.find(element);
  if (it == metrics_.end()) return fallback;
  auto jt = it->second.find(name);
  return jt == it->second.end() ? fallback : jt->second;
}

RTM create_rtm(const std::string& id) {
  if (id.empty()) throw Error(ErrorCode::invalid_argument, "model id must be non-empty");
  return RTM(id);
}

namespace {

void validate_annotation_target(const RTM& m, const Annotation& a) {
  if (a.target.empty()) throw Error(ErrorCode::invalid_argument, "annotation target must be non-empty");
  switch (a.kind) {
    case AnnotationKind::ExceptionFailure:
    case AnnotationKind::LifecycleFailure:
      if (!m.has_component(a.target)) {
        throw Error(ErrorCode::not_found,
                    std::string(to_string(a.kind)) + " target '" + a.target + "' does not exist");
      }
      break;
    case AnnotationKind::FailureHistory:
      if (a.target != m.id()) {
        throw Error(ErrorCode::invalid_argument, "FAILURE_HISTORY must target the architecture");
      }
      break;
    case AnnotationKind::PlannedAction:
      if (a.payload.count("action") == 0) {
        throw Error(ErrorCode::invalid_argument, "PLANNED_ACTION payload must contain an 'action' key");
      }
      break;
    default:
      // MISSING_COMPONENT and REPEATED_FAILURE may reference absent elements.
      break;
  }
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

RTM mutate(RTM model, const Edit& edit) {
  RTM& m = model;
  std::visit(
      overloaded{
          [&](const AddComponent& e) {
            const Component& c = e.component;
            if (c.id.empty()) throw Error(ErrorCode::invalid_argument, "component id must be non-empty");
            if (m.has_component(c.id)) {
              throw Error(ErrorCode::duplicate_id, "component '" + c.id + "' already exists");
            }
            m.components_.emplace(c.id, c);
          },
          [&](const RemoveComponent& e) {
            if (!m.has_component(e.id)) {
              throw Error(ErrorCode::not_found, "component '" + e.id + "' does not exist");
            }
            for (const auto& cid : m.connectors_touching(e.id)) m.connectors_.erase(cid);
            m.metrics_.erase(e.id);
            // Drop annotations that assert a property of the removed component.
            for (auto it = m.annotations_.begin(); it != m.annotations_.end();) {
              const bool strict = it->second.kind == AnnotationKind::ExceptionFailure ||
                                  it->second.kind == AnnotationKind::LifecycleFailure;
              if (strict && it->second.target == e.id) {
                it = m.annotations_.erase(it);
              } else {
                ++it;
              }
            }
            m.components_.erase(e.id);
          },
          [&](const SetLifecycle& e) {
            auto it = m.components_.find(e.id);
            if (it == m.components_.end()) {
              throw Error(ErrorCode::not_found, "component '" + e.id + "' does not exist");
            }
            it->second.lifecycle = e.to;
          },
          [&](const AddConnector& e) {
            const Connector& c = e.connector;
            if (c.id.empty()) throw Error(ErrorCode::invalid_argument, "connector id must be non-empty");
            if (m.find_connector(c.id)) {
              throw Error(ErrorCode::duplicate_id, "connector '" + c.id + "' already exists");
            }
            const Component* from = m.find_component(c.from);
            const Component* to = m.find_component(c.to);
            if (!from || from->required.count(c.required_iface) == 0) {
              throw Error(ErrorCode::dangling_endpoint, "connector '" + c.id + "': no required interface '" +
                                                            c.required_iface + "' on '" + c.from + "'");
            }
            if (!to || to->provided.count(c.provided_iface) == 0) {
              throw Error(ErrorCode::dangling_endpoint, "connector '" + c.id + "': no provided interface '" +
                                                            c.provided_iface + "' on '" + c.to + "'");
            }
            m.connectors_.emplace(c.id, c);
          },
          [&](const RemoveConnector& e) {
            if (!m.find_connector(e.id)) {
              throw Error(ErrorCode::not_found, "connector '" + e.id + "' does not exist");
            }
            m.connectors_.erase(e.id);
          },
          [&](const Annotate& e) {
            validate_annotation_target(m, e.annotation);
            m.annotations_[{e.annotation.kind, e.annotation.target}] = e.annotation;
          },
          [&](const RemoveAnnotation& e) {
            auto it = m.annotations_.find({e.kind, e.target});
            if (it == m.annotations_.end()) {
              throw Error(ErrorCode::not_found,
                          std::string("annotation ") + to_string(e.kind) + "@" + e.target + " does not exist");
            }
            m.annotations_.erase(it);
          },
          [&](const SetMetric& e) {
            if (!m.has_component(e.element) && !m.find_connector(e.element) && e.element != m.id()) {
              throw Error(ErrorCode::not_found, "metric element '" + e.element + "' does not exist");
            }
            m.metrics_[e.element][e.name] = e.value;
          },
          [&](const RemoveMetric& e) {
            auto it = m.metrics_.find(e.element);
            if (it == m.metrics_.end() || it->second.erase(e.name) == 0) {
              throw Error(ErrorCode::not_found, "metric '" + e.name + "' on '" + e.element + "' does not exist");
            }
            if (it->second.empty()) m.metrics_.erase(it);
          },
      },
      edit.op);
  return model;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

json model_to_json(const RTM& model) {
  json j;
  j["id"] = model.id();
  json comps = json::array();
  for (const auto& [id, c] : model.components()) {
    json jc;
    jc["id"] = c.id;
    jc["type"] = c.type;
    jc["lifecycle"] = to_string(c.lifecycle);
    jc["provides"] = c.provided;
    jc["requires"] = c.required;
    jc["critical"] = c.critical;
    jc["injected"] = c.injected;
    comps.push_back(std::move(jc));
  }
  j["components"] = std::move(comps);
  json conns = json::array();
  for (const auto& [id, c] : model.connectors()) {
    json jc;
    jc["id"] = c.id;
    jc["from"] = c.from;
    jc["required"] = c.required_iface;
    jc["to"] = c.to;
    jc["provided"] = c.provided_iface;
    conns.push_back(std::move(jc));
  }
  j["connectors"] = std::move(conns);
  json anns = json::array();
  for (const auto& [key, a] : model.annotations()) {
    json ja;
    ja["kind"] = to_string(a.kind);
    ja["target"] = a.target;
    ja["payload"] = a.payload;
    anns.push_back(std::move(ja));
  }
  j["annotations"] = std::move(anns);
  json mets = json::object();
  for (const auto& [element, values] : model.metrics()) {
    if (values.empty()) continue;
    mets[element] = values;
  }
  j["metrics"] = std::move(mets);
  return j;
}

namespace {

const json& require_field(const json& j, const char* key, const char* what) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw Error(ErrorCode::parse_error, std::string(what) + " is missing required key '" + key + "'");
  }
  return *it;
}

std::set<std::string> string_set(const json& j, const char* what) {
  if (!j.is_array()) throw Error(ErrorCode::parse_error, std::string(what) + " must be an array");
  std::set<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string()) throw Error(ErrorCode::parse_error, std::string(what) + " entries must be strings");
    if (!out.insert(v.get<std::string>()).second) {
      throw Error(ErrorCode::parse_error, std::string(what) + " contains a duplicate interface name");
    }
  }
  return out;
}

}  // namespace

RTM model_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::parse_error, "model document must be a JSON object");
  RTM m = create_rtm(require_field(j, "id", "model").get<std::string>());
  for (const auto& jc : require_field(j, "components", "model")) {
    Component c;
    c.id = require_field(jc, "id", "component").get<std::string>();
    c.type = require_field(jc, "type", "component").get<std::string>();
    c.lifecycle = lifecycle_from_string(require_field(jc, "lifecycle", "component").get<std::string>());
    c.provided = string_set(require_field(jc, "provides", "component"), "component provides");
    c.required = string_set(require_field(jc, "requires", "component"), "component requires");
    c.critical = jc.value("critical", false);
    c.injected = jc.value("injected", false);
    m = mutate(std::move(m), Edit{AddComponent{std::move(c)}});
  }
  for (const auto& jc : require_field(j, "connectors", "model")) {
    Connector c;
    c.id = require_field(jc, "id", "connector").get<std::string>();
    c.from = require_field(jc, "from", "connector").get<std::string>();
    c.required_iface = require_field(jc, "required", "connector").get<std::string>();
    c.to = require_field(jc, "to", "connector").get<std::string>();
    c.provided_iface = require_field(jc, "provided", "connector").get<std::string>();
    m = mutate(std::move(m), Edit{AddConnector{std::move(c)}});
  }
  for (const auto& ja : require_field(j, "annotations", "model")) {
    Annotation a;
    a.kind = annotation_kind_from_string(require_field(ja, "kind", "annotation").get<std::string>());
    a.target = require_field(ja, "target", "annotation").get<std::string>();
    for (const auto& [k, v] : require_field(ja, "payload", "annotation").items()) {
      if (!v.is_string()) throw Error(ErrorCode::parse_error, "annotation payload values must be strings");
      a.payload[k] = v.get<std::string>();
    }
    m = mutate(std::move(m), Edit{Annotate{std::move(a)}});
  }
  if (auto it = j.find("metrics"); it != j.end()) {
    for (const auto& [element, values] : it->items()) {
      for (const auto& [name, value] : values.items()) {
        if (!value.is_number()) throw Error(ErrorCode::parse_error, "metric values must be numbers");
        m = mutate(std::move(m), Edit{SetMetric{element, name, value.get<double>()}});
      }
    }
  }
  return m;
}

std::string serialize(const RTM& model) { return model_to_json(model).dump(2) + "\n"; }

namespace {

// Maps a byte offset from nlohmann's parse_error into line/column.
std::pair<int, int> line_col(std::string_view text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

RTM deserialize(std::string_view bytes) {
  json j;
  try {
    j = json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    auto [line, col] = line_col(bytes, e.byte > 0 ? e.byte - 1 : 0);
    std::ostringstream msg;
    msg << "line " << line << ", column " << col << " (offset " << e.byte << "): " << e.what();
    throw Error(ErrorCode::parse_error, msg.str());
  }
  return model_from_json(j);
}

RTM load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return deserialize(buf.str());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::parse_error) throw;
    throw Error(ErrorCode::parse_error, path.string() + ": " + e.what());
  }
}

void save_model(const RTM& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write '" + path.string() + "'");
  out << serialize(model);
}

}  // namespace rtmtest

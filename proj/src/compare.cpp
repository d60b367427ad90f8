#include "rtmtest/compare.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace rtmtest {

const char* to_string(ElementCategory cat) {
  switch (cat) {
    case ElementCategory::Model: return "model";
    case ElementCategory::Component: return "component";
    case ElementCategory::Connector: return "connector";
    case ElementCategory::Annotation: return "annotation";
  }
  return "?";
}

namespace {

ElementCategory category_from_string(std::string_view s) {
  if (s == "model") return ElementCategory::Model;
  if (s == "component") return ElementCategory::Component;
  if (s == "connector") return ElementCategory::Connector;
  if (s == "annotation") return ElementCategory::Annotation;
  throw Error(ErrorCode::parse_error, "unknown element category '" + std::string(s) + "'");
}

std::string annotation_descriptor_id(const AnnotationKey& key) {
  return std::string(to_string(key.first)) + "@" + key.second;
}

json component_to_json(const Component& c) {
  json j;
  j["id"] = c.id;
  j["type"] = c.type;
  j["lifecycle"] = to_string(c.lifecycle);
  j["provides"] = c.provided;
  j["requires"] = c.required;
  j["critical"] = c.critical;
  j["injected"] = c.injected;
  return j;
}

json connector_to_json(const Connector& c) {
  json j;
  j["id"] = c.id;
  j["from"] = c.from;
  j["required"] = c.required_iface;
  j["to"] = c.to;
  j["provided"] = c.provided_iface;
  return j;
}

json annotation_to_json(const Annotation& a) {
  json j;
  j["kind"] = to_string(a.kind);
  j["target"] = a.target;
  j["payload"] = a.payload;
  return j;
}

bool annotation_ignored(const Annotation& a, const IgnoreSet& ignore) {
  if (ignore.count(IgnoreField::Annotations)) return true;
  if (ignore.count(IgnoreField::PlannedActions)) {
    return a.kind == AnnotationKind::PlannedAction || a.kind == AnnotationKind::FailureHistory;
  }
  return false;
}

void sort_diff(Diff& d) {
  auto desc_key = [](const ElementDescriptor& e) { return std::make_pair(e.category, e.id); };
  std::sort(d.added.begin(), d.added.end(),
            [&](const auto& a, const auto& b) { return desc_key(a) < desc_key(b); });
  std::sort(d.removed.begin(), d.removed.end(),
            [&](const auto& a, const auto& b) { return desc_key(a) < desc_key(b); });
  std::sort(d.changed.begin(), d.changed.end(), [](const auto& a, const auto& b) {
    return std::tie(a.element_id, a.field) < std::tie(b.element_id, b.field);
  });
}

}  // namespace

json diff_to_json(const Diff& d) {
  json j;
  auto desc = [](const ElementDescriptor& e) {
    json o;
    o["category"] = to_string(e.category);
    o["id"] = e.id;
    o["value"] = e.value;
    return o;
  };
  j["added"] = json::array();
  for (const auto& e : d.added) j["added"].push_back(desc(e));
  j["removed"] = json::array();
  for (const auto& e : d.removed) j["removed"].push_back(desc(e));
  j["changed"] = json::array();
  for (const auto& c : d.changed) {
    json o;
    o["id"] = c.element_id;
    o["field"] = c.field;
    o["old"] = c.old_value;
    o["new"] = c.new_value;
    j["changed"].push_back(o);
  }
  return j;
}

Diff diff_from_json(const json& j) {
  Diff d;
  auto parse_desc = [](const json& o) {
    ElementDescriptor e;
    e.category = category_from_string(o.at("category").get<std::string>());
    e.id = o.at("id").get<std::string>();
    e.value = o.at("value");
    return e;
  };
  for (const auto& o : j.at("added")) d.added.push_back(parse_desc(o));
  for (const auto& o : j.at("removed")) d.removed.push_back(parse_desc(o));
  for (const auto& o : j.at("changed")) {
    FieldChange c;
    c.element_id = o.at("id").get<std::string>();
    c.field = o.at("field").get<std::string>();
    c.old_value = o.at("old");
    c.new_value = o.at("new");
    d.changed.push_back(c);
  }
  sort_diff(d);
  return d;
}

const char* to_string(IgnoreField f) {
  switch (f) {
    case IgnoreField::Annotations: return "annotations";
    case IgnoreField::Metrics: return "metrics";
    case IgnoreField::PlannedActions: return "planned-actions";
  }
  return "?";
}

IgnoreField ignore_field_from_string(std::string_view s) {
  if (s == "annotations") return IgnoreField::Annotations;
  if (s == "metrics") return IgnoreField::Metrics;
  if (s == "planned-actions") return IgnoreField::PlannedActions;
  throw Error(ErrorCode::parse_error, "unknown ignore field '" + std::string(s) + "'");
}

Diff diff(const RTM& left, const RTM& right, const IgnoreSet& ignore) {
  Diff d;

  if (left.id() != right.id()) {
    d.changed.push_back({"", "id", json(left.id()), json(right.id())});
  }

  // Components: match by id, compare fields.
  for (const auto& [id, lc] : left.components()) {
    const Component* rc = right.find_component(id);
    if (!rc) {
      d.removed.push_back({ElementCategory::Component, id, component_to_json(lc)});
      continue;
    }
    auto field = [&](const char* name, const json& lv, const json& rv) {
      if (lv != rv) d.changed.push_back({id, name, lv, rv});
    };
    field("type", json(lc.type), json(rc->type));
    field("lifecycle", json(to_string(lc.lifecycle)), json(to_string(rc->lifecycle)));
    field("provides", json(lc.provided), json(rc->provided));
    field("requires", json(lc.required), json(rc->required));
    field("critical", json(lc.critical), json(rc->critical));
    field("injected", json(lc.injected), json(rc->injected));
  }
  for (const auto& [id, rc] : right.components()) {
    if (!left.find_component(id)) {
      d.added.push_back({ElementCategory::Component, id, component_to_json(rc)});
    }
  }

  // Connectors.
  for (const auto& [id, lc] : left.connectors()) {
    const Connector* rc = right.find_connector(id);
    if (!rc) {
      d.removed.push_back({ElementCategory::Connector, id, connector_to_json(lc)});
      continue;
    }
    auto field = [&](const char* name, const std::string& lv, const std::string& rv) {
      if (lv != rv) d.changed.push_back({id, name, json(lv), json(rv)});
    };
    field("from", lc.from, rc->from);
    field("required", lc.required_iface, rc->required_iface);
    field("to", lc.to, rc->to);
    field("provided", lc.provided_iface, rc->provided_iface);
  }
  for (const auto& [id, rc] : right.connectors()) {
    if (!left.find_connector(id)) {
      d.added.push_back({ElementCategory::Connector, id, connector_to_json(rc)});
    }
  }

  // Annotations are compared as whole values.
  for (const auto& [key, la] : left.annotations()) {
    if (annotation_ignored(la, ignore)) continue;
    const Annotation* ra = right.find_annotation(key.first, key.second);
    const std::string desc_id = annotation_descriptor_id(key);
    if (!ra) {
      d.removed.push_back({ElementCategory::Annotation, desc_id, annotation_to_json(la)});
    } else if (!(la == *ra)) {
      d.changed.push_back({desc_id, "value", annotation_to_json(la), annotation_to_json(*ra)});
    }
  }
  for (const auto& [key, ra] : right.annotations()) {
    if (annotation_ignored(ra, ignore)) continue;
    if (!left.find_annotation(key.first, key.second)) {
      d.added.push_back({ElementCategory::Annotation, annotation_descriptor_id(key), annotation_to_json(ra)});
    }
  }

  // Metrics, as per-element named values.
  if (!ignore.count(IgnoreField::Metrics)) {
    auto metric_field = [](const std::string& name) { return "metric:" + name; };
    for (const auto& [element, lvals] : left.metrics()) {
      auto rit = right.metrics().find(element);
      for (const auto& [name, lv] : lvals) {
        const double* rv = nullptr;
        if (rit != right.metrics().end()) {
          auto jt = rit->second.find(name);
          if (jt != rit->second.end()) rv = &jt->second;
        }
        if (!rv) {
          d.changed.push_back({element, metric_field(name), json(lv), json()});
        } else if (*rv != lv) {
          d.changed.push_back({element, metric_field(name), json(lv), json(*rv)});
        }
      }
    }
    for (const auto& [element, rvals] : right.metrics()) {
      auto lit = left.metrics().find(element);
      for (const auto& [name, rv] : rvals) {
        const bool in_left =
            lit != left.metrics().end() && lit->second.find(name) != lit->second.end();
        if (!in_left) d.changed.push_back({element, metric_field(name), json(), json(rv)});
      }
    }
  }

  sort_diff(d);
  return d;
}

bool equal(const RTM& left, const RTM& right, const IgnoreSet& ignore) {
  return diff(left, right, ignore).empty();
}

namespace {

Component component_from_descriptor(const json& v) {
  Component c;
  c.id = v.at("id").get<std::string>();
  c.type = v.at("type").get<std::string>();
  c.lifecycle = lifecycle_from_string(v.at("lifecycle").get<std::string>());
  for (const auto& s : v.at("provides")) c.provided.insert(s.get<std::string>());
  for (const auto& s : v.at("requires")) c.required.insert(s.get<std::string>());
  c.critical = v.at("critical").get<bool>();
  c.injected = v.at("injected").get<bool>();
  return c;
}

Connector connector_from_descriptor(const json& v) {
  Connector c;
  c.id = v.at("id").get<std::string>();
  c.from = v.at("from").get<std::string>();
  c.required_iface = v.at("required").get<std::string>();
  c.to = v.at("to").get<std::string>();
  c.provided_iface = v.at("provided").get<std::string>();
  return c;
}

Annotation annotation_from_descriptor(const json& v) {
  Annotation a;
  a.kind = annotation_kind_from_string(v.at("kind").get<std::string>());
  a.target = v.at("target").get<std::string>();
  for (const auto& [k, s] : v.at("payload").items()) a.payload[k] = s.get<std::string>();
  return a;
}

[[noreturn]] void inconsistent(const std::string& what) {
  throw Error(ErrorCode::inconsistent_diff, what);
}

}  // namespace

RTM apply_diff(RTM base, const Diff& d) {
  RTM& m = base;

  // Removals first: deleted components take their connectors with them, but
  // the diff lists those connectors explicitly, so tolerate double removal.
  for (const auto& e : d.removed) {
    switch (e.category) {
      case ElementCategory::Component:
        if (!m.has_component(e.id)) inconsistent("removed component '" + e.id + "' not in base");
        m.components_.erase(e.id);
        for (const auto& cid : m.connectors_touching(e.id)) m.connectors_.erase(cid);
        m.metrics_.erase(e.id);
        break;
      case ElementCategory::Connector: {
        auto it = m.connectors_.find(e.id);
        if (it != m.connectors_.end()) {
          m.connectors_.erase(it);
        } else {
          // May already be gone via component removal; verify it was listed.
          bool endpoint_removed = false;
          for (const auto& r : d.removed) {
            if (r.category == ElementCategory::Component &&
                (e.value.at("from") == r.id || e.value.at("to") == r.id)) {
              endpoint_removed = true;
            }
          }
          if (!endpoint_removed) inconsistent("removed connector '" + e.id + "' not in base");
        }
        break;
      }
      case ElementCategory::Annotation: {
        const Annotation a = annotation_from_descriptor(e.value);
        if (m.annotations_.erase({a.kind, a.target}) == 0) {
          inconsistent("removed annotation '" + e.id + "' not in base");
        }
        break;
      }
      case ElementCategory::Model:
        inconsistent("model itself cannot be removed");
    }
  }

  for (const auto& e : d.added) {
    switch (e.category) {
      case ElementCategory::Component: {
        if (m.has_component(e.id)) inconsistent("added component '" + e.id + "' already in base");
        Component c = component_from_descriptor(e.value);
        m.components_.emplace(c.id, std::move(c));
        break;
      }
      case ElementCategory::Connector: {
        if (m.connectors_.count(e.id)) inconsistent("added connector '" + e.id + "' already in base");
        Connector c = connector_from_descriptor(e.value);
        m.connectors_.emplace(c.id, std::move(c));
        break;
      }
      case ElementCategory::Annotation: {
        Annotation a = annotation_from_descriptor(e.value);
        if (m.annotations_.count({a.kind, a.target})) {
          inconsistent("added annotation '" + e.id + "' already in base");
        }
        m.annotations_[{a.kind, a.target}] = std::move(a);
        break;
      }
      case ElementCategory::Model:
        inconsistent("model itself cannot be added");
    }
  }

  for (const auto& c : d.changed) {
    if (c.element_id.empty() && c.field == "id") {
      if (json(m.id()) != c.old_value) inconsistent("model id does not match diff");
      m.id_ = c.new_value.get<std::string>();
      continue;
    }
    if (c.field.rfind("metric:", 0) == 0) {
      const std::string name = c.field.substr(7);
      const double current = m.metric_or(c.element_id, name, std::numeric_limits<double>::quiet_NaN());
      const bool present = !std::isnan(current);
      if (c.old_value.is_null() != !present ||
          (present && json(current) != c.old_value)) {
        inconsistent("metric '" + c.field + "' on '" + c.element_id + "' does not match diff");
      }
      if (c.new_value.is_null()) {
        auto it = m.metrics_.find(c.element_id);
        if (it != m.metrics_.end()) {
          it->second.erase(name);
          if (it->second.empty()) m.metrics_.erase(it);
        }
      } else {
        m.metrics_[c.element_id][name] = c.new_value.get<double>();
      }
      continue;
    }
    if (c.field == "value") {
      // Whole-annotation change.
      Annotation updated = annotation_from_descriptor(c.new_value);
      auto it = m.annotations_.find({updated.kind, updated.target});
      if (it == m.annotations_.end() || annotation_to_json(it->second) != c.old_value) {
        inconsistent("changed annotation '" + c.element_id + "' does not match base");
      }
      it->second = std::move(updated);
      continue;
    }
    if (auto cit = m.components_.find(c.element_id); cit != m.components_.end()) {
      Component& comp = cit->second;
      json current = component_to_json(comp);
      if (current.at(c.field) != c.old_value) {
        inconsistent("component field '" + c.field + "' on '" + c.element_id + "' does not match base");
      }
      if (c.field == "type") {
        comp.type = c.new_value.get<std::string>();
      } else if (c.field == "lifecycle") {
        comp.lifecycle = lifecycle_from_string(c.new_value.get<std::string>());
      } else if (c.field == "provides" || c.field == "requires") {
        std::set<std::string> s;
        for (const auto& v : c.new_value) s.insert(v.get<std::string>());
        (c.field == "provides" ? comp.provided : comp.required) = std::move(s);
      } else if (c.field == "critical") {
        comp.critical = c.new_value.get<bool>();
      } else if (c.field == "injected") {
        comp.injected = c.new_value.get<bool>();
      } else {
        inconsistent("unknown component field '" + c.field + "'");
      }
      continue;
    }
    if (auto nit = m.connectors_.find(c.element_id); nit != m.connectors_.end()) {
      Connector& conn = nit->second;
      json current = connector_to_json(conn);
      if (current.at(c.field) != c.old_value) {
        inconsistent("connector field '" + c.field + "' on '" + c.element_id + "' does not match base");
      }
      const std::string v = c.new_value.get<std::string>();
      if (c.field == "from") {
        conn.from = v;
      } else if (c.field == "required") {
        conn.required_iface = v;
      } else if (c.field == "to") {
        conn.to = v;
      } else if (c.field == "provided") {
        conn.provided_iface = v;
      } else {
        inconsistent("unknown connector field '" + c.field + "'");
      }
      continue;
    }
    inconsistent("changed element '" + c.element_id + "' not in base");
  }

  return base;
}

// ---------------------------------------------------------------------------
// Constraints
// ---------------------------------------------------------------------------

namespace {

std::vector<ConstraintViolation> connector_endpoints_exist(const RTM& m) {
  std::vector<ConstraintViolation> out;
  for (const auto& [id, c] : m.connectors()) {
    const Component* from = m.find_component(c.from);
    const Component* to = m.find_component(c.to);
    if (!from || from->required.count(c.required_iface) == 0 || !to ||
        to->provided.count(c.provided_iface) == 0) {
      out.push_back({"connector-endpoints-exist", id, "connector references a missing endpoint"});
    }
  }
  return out;
}

std::vector<ConstraintViolation> no_dangling_required(const RTM& m) {
  std::vector<ConstraintViolation> out;
  for (const auto& [id, c] : m.components()) {
    if (c.lifecycle != Lifecycle::Started) continue;
    for (const auto& iface : c.required) {
      bool bound = false;
      for (const auto& [cid, conn] : m.connectors()) {
        if (conn.from == id && conn.required_iface == iface) {
          bound = true;
          break;
        }
      }
      if (!bound) {
        out.push_back({"no-dangling-required", id, "required interface '" + iface + "' is unbound"});
      }
    }
  }
  return out;
}

std::vector<ConstraintViolation> lifecycle_states_legal(const RTM& m) {
  std::vector<ConstraintViolation> out;
  for (const auto& [id, c] : m.connectors()) {
    const Component* from = m.find_component(c.from);
    const Component* to = m.find_component(c.to);
    if ((from && from->lifecycle == Lifecycle::Undeployed) ||
        (to && to->lifecycle == Lifecycle::Undeployed)) {
      out.push_back({"lifecycle-states-legal", id, "connector endpoint is UNDEPLOYED"});
    }
  }
  return out;
}

}  // namespace

ConstraintRegistry ConstraintRegistry::builtins() {
  ConstraintRegistry r;
  r.register_constraint("connector-endpoints-exist", connector_endpoints_exist);
  r.register_constraint("no-dangling-required", no_dangling_required);
  r.register_constraint("lifecycle-states-legal", lifecycle_states_legal);
  // critical-components-present closes over the expected set, so it is
  // registered as a forwarding check.
  r.constraints_["critical-components-present"] = nullptr;

  r.register_predicate("true", [](const RTM&, const std::vector<std::string>&) { return true; });
  r.register_predicate("false", [](const RTM&, const std::vector<std::string>&) { return false; });
  r.register_predicate("present", [](const RTM& m, const std::vector<std::string>& args) {
    return !args.empty() && m.has_component(args[0]);
  });
  r.register_predicate("absent", [](const RTM& m, const std::vector<std::string>& args) {
    return !args.empty() && !m.has_component(args[0]);
  });
  r.register_predicate("lifecycle", [](const RTM& m, const std::vector<std::string>& args) {
    if (args.size() < 2) return false;
    const Component* c = m.find_component(args[0]);
    return c && c->lifecycle == lifecycle_from_string(args[1]);
  });
  r.register_predicate("annotated", [](const RTM& m, const std::vector<std::string>& args) {
    if (args.empty()) return !m.annotations().empty();
    const AnnotationKind kind = annotation_kind_from_string(args[0]);
    if (args.size() == 1) {
      for (const auto& [key, a] : m.annotations()) {
        if (key.first == kind) return true;
      }
      return false;
    }
    return m.find_annotation(kind, args[1]) != nullptr;
  });
  r.register_predicate("metricAtLeast", [](const RTM& m, const std::vector<std::string>& args) {
    if (args.size() < 3) return false;
    return m.metric_or(args[0], args[1], 0.0) >= std::stod(args[2]);
  });
  return r;
}

void ConstraintRegistry::expect_critical(std::vector<std::string> ids) {
  expected_critical_ = std::move(ids);
  std::sort(expected_critical_.begin(), expected_critical_.end());
}

void ConstraintRegistry::register_constraint(const std::string& name, ConstraintFn fn) {
  constraints_[name] = std::move(fn);
}

void ConstraintRegistry::register_predicate(const std::string& name, PredicateFn fn) {
  predicates_[name] = std::move(fn);
}

std::vector<ConstraintViolation> ConstraintRegistry::run_constraint(const std::string& name,
                                                                    const RTM& model) const {
  auto it = constraints_.find(name);
  if (it == constraints_.end()) {
    throw Error(ErrorCode::unknown_constraint, "'" + name + "' is not registered");
  }
  if (name == "critical-components-present" && !it->second) {
    std::vector<ConstraintViolation> out;
    for (const auto& id : expected_critical_) {
      const Component* c = model.find_component(id);
      if (!c) {
        out.push_back({name, id, "critical component is missing"});
      } else if (c->lifecycle != Lifecycle::Started) {
        out.push_back({name, id, "critical component is not STARTED"});
      }
    }
    for (const auto& [id, c] : model.components()) {
      if (c.critical && c.lifecycle != Lifecycle::Started &&
          !std::binary_search(expected_critical_.begin(), expected_critical_.end(), id)) {
        out.push_back({name, id, "critical component is not STARTED"});
      }
    }
    return out;
  }
  return it->second(model);
}

bool ConstraintRegistry::eval_predicate(const std::string& name, const RTM& model,
                                        const std::vector<std::string>& args) const {
  auto it = predicates_.find(name);
  if (it == predicates_.end()) {
    throw Error(ErrorCode::unknown_predicate, "'" + name + "' is not registered");
  }
  return it->second(model, args);
}

std::set<std::string> ConstraintRegistry::constraint_names() const {
  std::set<std::string> out;
  for (const auto& [name, fn] : constraints_) out.insert(name);
  return out;
}

std::vector<ConstraintViolation> check_constraints(const RTM& model,
                                                   const std::set<std::string>& constraints,
                                                   const ConstraintRegistry& registry) {
  std::vector<ConstraintViolation> out;
  for (const auto& name : constraints) {
    auto part = registry.run_constraint(name, model);
    out.insert(out.end(), part.begin(), part.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ConstraintViolation> check_all_builtin(const RTM& model,
                                                   const ConstraintRegistry& registry) {
  return check_constraints(model, registry.constraint_names(), registry);
}

std::vector<ConstraintViolation> check_adaptation_well_defined(const RTM& before, const RTM& after) {
  std::vector<ConstraintViolation> out;

  auto planned_covers = [&](const std::string& id, std::initializer_list<const char*> actions) {
    for (const auto& [key, a] : after.annotations()) {
      if (a.kind != AnnotationKind::PlannedAction) continue;
      auto action = a.payload.find("action");
      if (action == a.payload.end()) continue;
      bool action_matches = false;
      for (const char* want : actions) {
        if (action->second == want) action_matches = true;
      }
      if (!action_matches) continue;
      auto repl = a.payload.find("replacement");
      if (a.target == id || (repl != a.payload.end() && repl->second == id)) return true;
    }
    return false;
  };

  for (const auto& [id, b] : before.components()) {
    const Component* a = after.find_component(id);
    if (!a) {
      const bool excused = b.lifecycle == Lifecycle::Undeployed || b.injected ||
                           planned_covers(id, {"REPLACE"});
      if (!excused) {
        out.push_back({"lifecycle-well-defined", id,
                       std::string("component removed while ") + to_string(b.lifecycle)});
      }
      continue;
    }
    if (a->lifecycle != b.lifecycle && !lifecycle_transition_legal(b.lifecycle, a->lifecycle)) {
      out.push_back({"lifecycle-well-defined", id,
                     std::string("illegal lifecycle change ") + to_string(b.lifecycle) + " -> " +
                         to_string(a->lifecycle)});
    }
  }
  for (const auto& [id, a] : after.components()) {
    if (before.find_component(id)) continue;
    if (a.lifecycle == Lifecycle::Deployed) continue;
    // A re-created component may enter fully started when a planned action
    // stands for the collapsed deploy-and-start sequence.
    if (planned_covers(id, {"REDEPLOY", "REPLACE", "START"})) continue;
    out.push_back({"lifecycle-well-defined", id,
                   std::string("component added in ") + to_string(a.lifecycle) +
                       " without a planned action"});
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace rtmtest

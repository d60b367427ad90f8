#include "rtmtest/mape.hpp"

#include <fstream>
#include <sstream>

namespace rtmtest {

const char* to_string(Phase p) {
  switch (p) {
    case Phase::Monitored: return "MONITORED";
    case Phase::Analyzed: return "ANALYZED";
    case Phase::Planned: return "PLANNED";
  }
  return "?";
}

Phase phase_from_string(std::string_view s) {
  if (s == "MONITORED") return Phase::Monitored;
  if (s == "ANALYZED") return Phase::Analyzed;
  if (s == "PLANNED") return Phase::Planned;
  throw Error(ErrorCode::parse_error, "unknown phase '" + std::string(s) + "'");
}

Trace record(Trace trace, Phase phase, RTM model, std::optional<int> iteration) {
  int iter;
  if (trace.snapshots.empty()) {
    iter = iteration.value_or(0);
    if (iter < 0) throw Error(ErrorCode::order_violation, "iteration must be non-negative");
  } else {
    const Snapshot& last = trace.snapshots.back();
    if (iteration) {
      iter = *iteration;
      const bool after_last =
          iter > last.iteration ||
          (iter == last.iteration && static_cast<int>(phase) > static_cast<int>(last.phase));
      if (!after_last) {
        std::ostringstream msg;
        msg << to_string(phase) << "(" << iter << ") does not follow " << to_string(last.phase)
            << "(" << last.iteration << ")";
        throw Error(ErrorCode::order_violation, msg.str());
      }
    } else {
      iter = static_cast<int>(phase) > static_cast<int>(last.phase) ? last.iteration
                                                                    : last.iteration + 1;
    }
  }
  trace.snapshots.push_back({phase, iter, std::move(model)});
  return trace;
}

Trace project(const Trace& trace, const std::set<Phase>& phases) {
  Trace out = trace;
  out.snapshots.clear();
  for (const auto& s : trace.snapshots) {
    if (phases.count(s.phase)) out.snapshots.push_back(s);
  }
  return out;
}

json trace_to_json(const Trace& trace) {
  json j;
  j["id"] = trace.id;
  if (trace.seed) {
    j["seed"] = *trace.seed;
  } else {
    j["seed"] = nullptr;
  }
  j["storage"] = trace.storage == TraceStorage::Full ? "full" : "delta";
  if (!trace.engine.empty()) j["engine"] = trace.engine;
  if (trace.iterations) j["iterations"] = *trace.iterations;
  if (trace.automaton_doc) j["automaton"] = *trace.automaton_doc;
  json snaps = json::array();
  const RTM* prev = nullptr;
  for (const auto& s : trace.snapshots) {
    json js;
    js["iteration"] = s.iteration;
    js["phase"] = to_string(s.phase);
    if (trace.storage == TraceStorage::Delta && prev) {
      js["diff"] = diff_to_json(diff(*prev, s.model));
    } else {
      js["model"] = model_to_json(s.model);
    }
    prev = &s.model;
    snaps.push_back(std::move(js));
  }
  j["snapshots"] = std::move(snaps);
  return j;
}

Trace trace_from_json(const json& j) {
  Trace t;
  t.id = j.at("id").get<std::string>();
  if (j.contains("seed") && !j.at("seed").is_null()) t.seed = j.at("seed").get<std::uint64_t>();
  const std::string storage = j.value("storage", "full");
  if (storage == "full") {
    t.storage = TraceStorage::Full;
  } else if (storage == "delta") {
    t.storage = TraceStorage::Delta;
  } else {
    throw Error(ErrorCode::parse_error, "unknown trace storage mode '" + storage + "'");
  }
  t.engine = j.value("engine", "");
  if (j.contains("iterations")) t.iterations = j.at("iterations").get<int>();
  if (j.contains("automaton")) t.automaton_doc = j.at("automaton");

  std::optional<RTM> prev;
  for (const auto& js : j.at("snapshots")) {
    Snapshot s;
    s.iteration = js.at("iteration").get<int>();
    s.phase = phase_from_string(js.at("phase").get<std::string>());
    if (js.contains("model")) {
      s.model = model_from_json(js.at("model"));
    } else if (js.contains("diff")) {
      if (!prev) throw Error(ErrorCode::parse_error, "first snapshot of a delta trace needs a full model");
      s.model = apply_diff(*prev, diff_from_json(js.at("diff")));
    } else {
      throw Error(ErrorCode::parse_error, "snapshot record carries neither 'model' nor 'diff'");
    }
    prev = s.model;
    t.snapshots.push_back(std::move(s));
  }
  return t;
}

std::string serialize_trace(const Trace& trace) { return trace_to_json(trace).dump(2) + "\n"; }

Trace parse_trace(std::string_view bytes) {
  json j;
  try {
    j = json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::parse_error, std::string("trace: ") + e.what());
  }
  return trace_from_json(j);
}

Trace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_trace(buf.str());
}

void save_trace(const Trace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write '" + path.string() + "'");
  out << serialize_trace(trace);
}

bool traces_equal(const Trace& a, const Trace& b) {
  if (a.id != b.id || a.seed != b.seed || a.snapshots.size() != b.snapshots.size()) return false;
  for (std::size_t i = 0; i < a.snapshots.size(); ++i) {
    const Snapshot& x = a.snapshots[i];
    const Snapshot& y = b.snapshots[i];
    if (x.phase != y.phase || x.iteration != y.iteration || !(x.model == y.model)) return false;
  }
  return true;
}

bool analyze_preserves_structure(const RTM& in, const RTM& out) {
  return equal(in, out, {IgnoreField::Annotations, IgnoreField::Metrics});
}

}  // namespace rtmtest

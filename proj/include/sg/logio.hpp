#pragma once

// Flight-log JSONL: one record per line, fixed key order, strict read-side
// validation that reports 1-based line numbers. Also the observation sidecar
// (what the mind saw per decision), which analytics aligns by t_ms.

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sg/core.hpp"

namespace sg {

inline nlohmann::ordered_json record_to_json(const FlightRecord& r) {
  nlohmann::ordered_json j;
  j["t_ms"] = r.t_ms;
  j["persona_id"] = r.persona_id;
  j["action"] = std::string(1, letter_from_action(r.action));
  j["reason"] = r.reason;
  j["latency_ms"] = r.latency_ms;
  if (r.pose) {
    j["pose"] = {{"x_m", r.pose->x_m},
                 {"y_m", r.pose->y_m},
                 {"z_m", r.pose->z_m},
                 {"heading_deg", r.pose->heading_deg}};
  } else {
    j["pose"] = nullptr;
  }
  j["human_visible"] = r.human_visible;
  j["collision"] = r.collision;
  return j;
}

inline std::string record_to_line(const FlightRecord& r) { return record_to_json(r).dump(); }

namespace detail {

[[noreturn]] inline void schema_fail(std::size_t line_no, const std::string& msg) {
  throw Error(Err::Schema, "line " + std::to_string(line_no) + ": " + msg);
}

inline const nlohmann::json& schema_key(const nlohmann::json& j, const char* key,
                                        std::size_t line_no) {
  if (!j.contains(key)) schema_fail(line_no, std::string("missing key '") + key + "'");
  return j.at(key);
}

}  // namespace detail

/// Parses and validates one log line. Throws SchemaViolation naming the line
/// for any missing key, wrong type, unknown action letter, negative
/// latency or malformed pose. Unknown keys are violations too: the schema is
/// closed by contract.
inline FlightRecord record_from_line(const std::string& line, std::size_t line_no) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    detail::schema_fail(line_no, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) detail::schema_fail(line_no, "record must be a JSON object");

  static constexpr const char* kKeys[] = {"t_ms",       "persona_id",    "action",   "reason",
                                          "latency_ms", "pose",          "human_visible",
                                          "collision"};
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* k : kKeys) known |= key == k;
    if (!known) detail::schema_fail(line_no, "unknown key '" + key + "'");
  }

  FlightRecord r;
  const auto& t = detail::schema_key(j, "t_ms", line_no);
  if (!t.is_number_integer() || t.get<std::int64_t>() < 0)
    detail::schema_fail(line_no, "t_ms must be a non-negative integer");
  r.t_ms = t.get<std::int64_t>();

  const auto& pid = detail::schema_key(j, "persona_id", line_no);
  if (!pid.is_string() || pid.get<std::string>().empty())
    detail::schema_fail(line_no, "persona_id must be a non-empty string");
  r.persona_id = pid.get<std::string>();

  const auto& act = detail::schema_key(j, "action", line_no);
  if (!act.is_string() || act.get<std::string>().size() != 1)
    detail::schema_fail(line_no, "action must be a single-letter string");
  auto action = action_from_letter(act.get<std::string>()[0]);
  if (!action)
    detail::schema_fail(line_no, "action letter '" + act.get<std::string>() + "' is not in frltuds");
  r.action = *action;

  const auto& reason = detail::schema_key(j, "reason", line_no);
  if (!reason.is_string()) detail::schema_fail(line_no, "reason must be a string");
  r.reason = reason.get<std::string>();

  const auto& lat = detail::schema_key(j, "latency_ms", line_no);
  if (!lat.is_number_integer() || lat.get<std::int64_t>() < 0)
    detail::schema_fail(line_no, "latency_ms must be a non-negative integer");
  r.latency_ms = lat.get<std::int64_t>();

  const auto& pose = detail::schema_key(j, "pose", line_no);
  if (pose.is_null()) {
    r.pose = std::nullopt;
  } else if (pose.is_object()) {
    Pose p;
    for (const char* k : {"x_m", "y_m", "z_m", "heading_deg"})
      if (!pose.contains(k) || !pose.at(k).is_number())
        detail::schema_fail(line_no, std::string("pose.") + k + " must be a number");
    p.x_m = pose.at("x_m").get<double>();
    p.y_m = pose.at("y_m").get<double>();
    p.z_m = pose.at("z_m").get<double>();
    p.heading_deg = pose.at("heading_deg").get<double>();
    r.pose = p;
  } else {
    detail::schema_fail(line_no, "pose must be an object or null");
  }

  const auto& hv = detail::schema_key(j, "human_visible", line_no);
  if (!hv.is_boolean()) detail::schema_fail(line_no, "human_visible must be a boolean");
  r.human_visible = hv.get<bool>();

  const auto& col = detail::schema_key(j, "collision", line_no);
  if (!col.is_boolean()) detail::schema_fail(line_no, "collision must be a boolean");
  r.collision = col.get<bool>();

  return r;
}

/// Streaming writer so live flights persist records as they happen.
class FlightLogWriter {
 public:
  explicit FlightLogWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw Error(Err::Config, "cannot write " + path);
  }

  void write(const FlightRecord& r) {
    out_ << record_to_line(r) << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

inline void write_flight_log(const std::string& path, const std::vector<FlightRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Err::Config, "cannot write " + path);
  for (const auto& r : records) out << record_to_line(r) << '\n';
}

/// Reads and validates a whole log. Beyond per-line schema checks this
/// enforces the cross-line invariant: t_ms strictly increasing.
inline std::vector<FlightRecord> read_flight_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Err::Config, "cannot open " + path);
  std::vector<FlightRecord> records;
  std::string line;
  std::size_t line_no = 0;
  std::int64_t prev_t = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    FlightRecord r = record_from_line(line, line_no);
    if (r.t_ms <= prev_t)
      detail::schema_fail(line_no, "t_ms must be strictly increasing (" +
                                       std::to_string(r.t_ms) + " after " + std::to_string(prev_t) + ")");
    prev_t = r.t_ms;
    records.push_back(std::move(r));
  }
  return records;
}

// ---------------------------------------------------------------------------
// Observation sidecar

/// Prefix for observation lines carried over the robot link as text frames.
inline constexpr std::string_view kObsPrefix = "#OBS ";

inline nlohmann::ordered_json observation_to_json(const Observation& obs) {
  nlohmann::ordered_json j;
  j["t_ms"] = obs.timestamp_ms;
  j["fov_deg"] = obs.fov_deg;
  j["entities"] = nlohmann::ordered_json::array();
  for (const auto& e : obs.entities) {
    j["entities"].push_back({{"kind", entity_kind_name(e.kind)},
                             {"bearing_deg", e.bearing_deg},
                             {"range_m", e.range_m},
                             {"label", e.label}});
  }
  return j;
}

inline Observation observation_from_json(const nlohmann::json& j, std::size_t line_no) {
  if (!j.is_object()) detail::schema_fail(line_no, "observation must be a JSON object");
  Observation obs;
  const auto& t = detail::schema_key(j, "t_ms", line_no);
  if (!t.is_number_integer()) detail::schema_fail(line_no, "t_ms must be an integer");
  obs.timestamp_ms = t.get<std::int64_t>();
  const auto& fov = detail::schema_key(j, "fov_deg", line_no);
  if (!fov.is_number()) detail::schema_fail(line_no, "fov_deg must be a number");
  obs.fov_deg = fov.get<double>();
  const auto& ents = detail::schema_key(j, "entities", line_no);
  if (!ents.is_array()) detail::schema_fail(line_no, "entities must be an array");
  for (const auto& e : ents) {
    SceneEntity ent;
    const auto& kind = detail::schema_key(e, "kind", line_no);
    auto parsed = kind.is_string() ? entity_kind_from_name(kind.get<std::string>()) : std::nullopt;
    if (!parsed) detail::schema_fail(line_no, "unknown entity kind");
    ent.kind = *parsed;
    const auto& bearing = detail::schema_key(e, "bearing_deg", line_no);
    const auto& range = detail::schema_key(e, "range_m", line_no);
    if (!bearing.is_number() || !range.is_number())
      detail::schema_fail(line_no, "bearing_deg and range_m must be numbers");
    ent.bearing_deg = bearing.get<double>();
    ent.range_m = range.get<double>();
    if (ent.range_m <= 0.0) detail::schema_fail(line_no, "range_m must be positive");
    if (e.contains("label")) {
      if (!e.at("label").is_string()) detail::schema_fail(line_no, "label must be a string");
      ent.label = e.at("label").get<std::string>();
    }
    obs.entities.push_back(std::move(ent));
  }
  return obs;
}

inline std::string observation_to_line(const Observation& obs) {
  return observation_to_json(obs).dump();
}

inline void write_observations(const std::string& path, const std::vector<Observation>& observations) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Err::Config, "cannot write " + path);
  for (const auto& o : observations) out << observation_to_line(o) << '\n';
}

inline std::vector<Observation> read_observations(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Err::Config, "cannot open " + path);
  std::vector<Observation> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      detail::schema_fail(line_no, std::string("invalid JSON: ") + e.what());
    }
    out.push_back(observation_from_json(j, line_no));
  }
  return out;
}

}  // namespace sg

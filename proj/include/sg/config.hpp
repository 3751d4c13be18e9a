#pragma once

// Config loading: personas and environments from TOML, plus the JSON run
// manifest that freezes every input of a flight so it can be replayed
// byte-identically. All validation failures are ConfigError and name the
// offending file and key.

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sg/core.hpp"
#include "sg/mind.hpp"
#include "sg/sim.hpp"
#include "sg/toml.hpp"

namespace sg {

namespace detail {

// Works for both TomlDoc and nlohmann::json lookups.
template <typename Doc>
const Doc& require(const Doc& doc, const std::string& key, const std::string& origin) {
  if (!doc.is_object() || !doc.contains(key))
    throw Error(Err::Config, origin + ": missing key '" + key + "'");
  return doc.at(key);
}

template <typename Doc>
std::string require_string(const Doc& doc, const std::string& key, const std::string& origin) {
  const auto& v = require(doc, key, origin);
  if (!v.is_string()) throw Error(Err::Config, origin + ": '" + key + "' must be a string");
  return v.template get<std::string>();
}

template <typename Doc>
double require_number(const Doc& doc, const std::string& key, const std::string& origin) {
  const auto& v = require(doc, key, origin);
  if (!v.is_number()) throw Error(Err::Config, origin + ": '" + key + "' must be a number");
  return v.template get<double>();
}

template <typename Doc>
double number_or(const Doc& doc, const std::string& key, double fallback,
                 const std::string& origin) {
  if (!doc.is_object() || !doc.contains(key)) return fallback;
  return require_number(doc, key, origin);
}

template <typename Doc>
std::string string_or(const Doc& doc, const std::string& key, const std::string& fallback,
                      const std::string& origin) {
  if (!doc.is_object() || !doc.contains(key)) return fallback;
  return require_string(doc, key, origin);
}

template <typename Doc>
bool bool_or(const Doc& doc, const std::string& key, bool fallback, const std::string& origin) {
  if (!doc.is_object() || !doc.contains(key)) return fallback;
  const auto& v = doc.at(key);
  if (!v.is_boolean()) throw Error(Err::Config, origin + ": '" + key + "' must be a boolean");
  return v.template get<bool>();
}

template <typename Doc>
std::array<double, 2> require_xy(const Doc& doc, const std::string& key,
                                 const std::string& origin) {
  const auto& v = require(doc, key, origin);
  if (!v.is_array() || v.size() != 2 || !v.at(0).is_number() || !v.at(1).is_number())
    throw Error(Err::Config, origin + ": '" + key + "' must be [x, y]");
  return {v.at(0).template get<double>(), v.at(1).template get<double>()};
}

inline void check_probability(double p, const std::string& key, const std::string& origin) {
  if (!(p >= 0.0 && p <= 1.0))
    throw Error(Err::Config, origin + ": '" + key + "' must be within [0, 1]");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scripted-policy parameters (shared by personas and scripted backends)

template <typename Doc>
ScriptedPolicyParams policy_from_doc(const Doc& doc, const std::string& origin,
                                     ScriptedPolicyParams base = {}) {
  base.approach_human_prob =
      detail::number_or(doc, "approach_human_prob", base.approach_human_prob, origin);
  base.stop_prob = detail::number_or(doc, "stop_prob", base.stop_prob, origin);
  base.vertical_avoid_prob =
      detail::number_or(doc, "vertical_avoid_prob", base.vertical_avoid_prob, origin);
  base.explore_bias = detail::number_or(doc, "explore_bias", base.explore_bias, origin);
  base.rng_seed = static_cast<std::uint64_t>(
      detail::number_or(doc, "rng_seed", static_cast<double>(base.rng_seed), origin));
  detail::check_probability(base.approach_human_prob, "approach_human_prob", origin);
  detail::check_probability(base.stop_prob, "stop_prob", origin);
  detail::check_probability(base.vertical_avoid_prob, "vertical_avoid_prob", origin);
  if (base.explore_bias < 0.0)
    throw Error(Err::Config, origin + ": 'explore_bias' must be >= 0");
  return base;
}

inline nlohmann::ordered_json policy_to_json(const ScriptedPolicyParams& p) {
  return {{"approach_human_prob", p.approach_human_prob},
          {"stop_prob", p.stop_prob},
          {"vertical_avoid_prob", p.vertical_avoid_prob},
          {"explore_bias", p.explore_bias},
          {"rng_seed", p.rng_seed}};
}

// ---------------------------------------------------------------------------
// Personas

template <typename Doc>
PersonaSpec persona_from_doc(const Doc& doc, const std::string& origin) {
  PersonaSpec p;
  p.id = detail::require_string(doc, "id", origin);
  if (p.id.empty()) throw Error(Err::Config, origin + ": 'id' must not be empty");
  p.preamble_prompt = detail::require_string(doc, "preamble_prompt", origin);
  p.directional_prompt = detail::require_string(doc, "directional_prompt", origin);
  if (p.preamble_prompt.empty() || p.directional_prompt.empty())
    throw Error(Err::Config, origin + ": prompts must not be empty");
  p.voice = detail::string_or(doc, "voice", "cloud", origin);

  if (doc.contains("policy"))
    p.policy = policy_from_doc(doc.at("policy"), origin + ".policy", p.policy);
  return p;
}

inline PersonaSpec load_persona(const std::string& path) {
  return persona_from_doc(parse_toml_file(path), path);
}

inline nlohmann::ordered_json persona_to_json(const PersonaSpec& p) {
  return {{"id", p.id},
          {"voice", p.voice},
          {"preamble_prompt", p.preamble_prompt},
          {"directional_prompt", p.directional_prompt},
          {"policy", policy_to_json(p.policy)}};
}

// ---------------------------------------------------------------------------
// Environments

template <typename Doc>
Environment environment_from_doc(const Doc& doc, const std::string& origin) {
  Environment env;
  env.name = detail::require_string(doc, "name", origin);
  env.width_m = detail::require_number(doc, "width_m", origin);
  env.height_m = detail::require_number(doc, "height_m", origin);
  env.ceiling_m = detail::require_number(doc, "ceiling_m", origin);

  const auto& spawn = detail::require(doc, "spawn", origin);
  const std::string so = origin + ".spawn";
  env.spawn.x_m = detail::require_number(spawn, "x_m", so);
  env.spawn.y_m = detail::require_number(spawn, "y_m", so);
  env.spawn.z_m = detail::number_or(spawn, "z_m", 1.5, so);
  env.spawn.heading_deg = detail::number_or(spawn, "heading_deg", 0.0, so);

  if (doc.contains("obstacles")) {
    const auto& arr = doc.at("obstacles");
    if (!arr.is_array()) throw Error(Err::Config, origin + ": 'obstacles' must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string oo = origin + ".obstacles[" + std::to_string(i) + "]";
      const auto& o = arr.at(i);
      ObstacleShape shape;
      std::string kind = detail::require_string(o, "kind", oo);
      auto center = detail::require_xy(o, "center", oo);
      shape.cx = center[0];
      shape.cy = center[1];
      shape.label = detail::string_or(o, "label", "", oo);
      shape.is_landmark = detail::bool_or(o, "landmark", false, oo);
      if (kind == "circle") {
        shape.kind = ObstacleShape::Kind::Circle;
        shape.radius = detail::require_number(o, "radius", oo);
        if (shape.radius <= 0.0) throw Error(Err::Config, oo + ": 'radius' must be positive");
      } else if (kind == "box") {
        shape.kind = ObstacleShape::Kind::Box;
        auto he = detail::require_xy(o, "half_extents", oo);
        shape.half_x = he[0];
        shape.half_y = he[1];
        if (shape.half_x <= 0.0 || shape.half_y <= 0.0)
          throw Error(Err::Config, oo + ": 'half_extents' must be positive");
      } else {
        throw Error(Err::Config, oo + ": 'kind' must be \"circle\" or \"box\"");
      }
      env.obstacles.push_back(std::move(shape));
    }
  }

  if (doc.contains("humans")) {
    const auto& arr = doc.at("humans");
    if (!arr.is_array()) throw Error(Err::Config, origin + ": 'humans' must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string ho = origin + ".humans[" + std::to_string(i) + "]";
      const auto& h = arr.at(i);
      HumanAgent agent;
      agent.label = detail::string_or(h, "label", "human", ho);
      auto start = detail::require_xy(h, "start", ho);
      agent.x = start[0];
      agent.y = start[1];
      agent.speed_mps = detail::number_or(h, "speed_mps", 0.8, ho);
      if (agent.speed_mps < 0.0) throw Error(Err::Config, ho + ": 'speed_mps' must be >= 0");
      if (h.contains("waypoints")) {
        const auto& wps = h.at("waypoints");
        if (!wps.is_array()) throw Error(Err::Config, ho + ": 'waypoints' must be an array");
        for (std::size_t w = 0; w < wps.size(); ++w) {
          const auto& wp = wps.at(w);
          if (!wp.is_array() || wp.size() != 2)
            throw Error(Err::Config, ho + ": waypoint " + std::to_string(w) + " must be [x, y]");
          agent.waypoints.push_back(
              {wp.at(0).template get<double>(), wp.at(1).template get<double>()});
        }
      }
      env.humans.push_back(std::move(agent));
    }
  }

  if (doc.contains("landmarks")) {
    const auto& arr = doc.at("landmarks");
    if (!arr.is_array()) throw Error(Err::Config, origin + ": 'landmarks' must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string lo = origin + ".landmarks[" + std::to_string(i) + "]";
      const auto& l = arr.at(i);
      LandmarkDef lm;
      lm.label = detail::require_string(l, "label", lo);
      auto p = detail::require_xy(l, "position", lo);
      lm.x = p[0];
      lm.y = p[1];
      env.landmarks.push_back(std::move(lm));
    }
  }

  env.validate();
  return env;
}

inline Environment load_environment(const std::string& path) {
  return environment_from_doc(parse_toml_file(path), path);
}

inline nlohmann::ordered_json environment_to_json(const Environment& env) {
  nlohmann::ordered_json j = {{"name", env.name},
                              {"width_m", env.width_m},
                              {"height_m", env.height_m},
                              {"ceiling_m", env.ceiling_m},
                              {"spawn",
                               {{"x_m", env.spawn.x_m},
                                {"y_m", env.spawn.y_m},
                                {"z_m", env.spawn.z_m},
                                {"heading_deg", env.spawn.heading_deg}}}};
  j["obstacles"] = nlohmann::ordered_json::array();
  for (const auto& o : env.obstacles) {
    nlohmann::ordered_json jo = {{"kind", o.kind == ObstacleShape::Kind::Circle ? "circle" : "box"},
                                 {"label", o.label},
                                 {"center", {o.cx, o.cy}},
                                 {"landmark", o.is_landmark}};
    if (o.kind == ObstacleShape::Kind::Circle)
      jo["radius"] = o.radius;
    else
      jo["half_extents"] = {o.half_x, o.half_y};
    j["obstacles"].push_back(std::move(jo));
  }
  j["humans"] = nlohmann::ordered_json::array();
  for (const auto& h : env.humans) {
    nlohmann::ordered_json jh = {{"label", h.label},
                                 {"start", {h.x, h.y}},
                                 {"speed_mps", h.speed_mps}};
    jh["waypoints"] = nlohmann::ordered_json::array();
    for (const auto& wp : h.waypoints) jh["waypoints"].push_back({wp[0], wp[1]});
    j["humans"].push_back(std::move(jh));
  }
  j["landmarks"] = nlohmann::ordered_json::array();
  for (const auto& l : env.landmarks)
    j["landmarks"].push_back({{"label", l.label}, {"position", {l.x, l.y}}});
  return j;
}

// ---------------------------------------------------------------------------
// Sim config and backends

template <typename Doc>
SimConfig sim_config_from_doc(const Doc& doc, const std::string& origin) {
  SimConfig cfg;
  cfg.dt_s = detail::number_or(doc, "dt_s", cfg.dt_s, origin);
  cfg.thrust_accel_mps2 = detail::number_or(doc, "thrust_accel_mps2", cfg.thrust_accel_mps2, origin);
  cfg.drag_per_s = detail::number_or(doc, "drag_per_s", cfg.drag_per_s, origin);
  cfg.turn_rate_dps = detail::number_or(doc, "turn_rate_dps", cfg.turn_rate_dps, origin);
  cfg.vertical_rate_mps = detail::number_or(doc, "vertical_rate_mps", cfg.vertical_rate_mps, origin);
  cfg.latency.mean_s = detail::number_or(doc, "latency_mean_s", cfg.latency.mean_s, origin);
  cfg.latency.sd_s = detail::number_or(doc, "latency_sd_s", cfg.latency.sd_s, origin);
  cfg.rng_seed = static_cast<std::uint64_t>(
      detail::number_or(doc, "rng_seed", static_cast<double>(cfg.rng_seed), origin));
  if (cfg.dt_s <= 0.0) throw Error(Err::Config, origin + ": 'dt_s' must be positive");
  if (cfg.drag_per_s < 0.0) throw Error(Err::Config, origin + ": 'drag_per_s' must be >= 0");
  if (cfg.latency.sd_s < 0.0) throw Error(Err::Config, origin + ": 'latency_sd_s' must be >= 0");
  return cfg;
}

inline nlohmann::ordered_json sim_config_to_json(const SimConfig& cfg) {
  return {{"dt_s", cfg.dt_s},
          {"thrust_accel_mps2", cfg.thrust_accel_mps2},
          {"drag_per_s", cfg.drag_per_s},
          {"turn_rate_dps", cfg.turn_rate_dps},
          {"vertical_rate_mps", cfg.vertical_rate_mps},
          {"latency_mean_s", cfg.latency.mean_s},
          {"latency_sd_s", cfg.latency.sd_s},
          {"rng_seed", cfg.rng_seed}};
}

template <typename Doc>
MindBackend backend_from_doc(const Doc& doc, const std::string& origin) {
  std::string kind = detail::require_string(doc, "kind", origin);
  if (kind == "scripted") {
    ScriptedPolicyParams sp;
    if (doc.contains("policy")) sp = policy_from_doc(doc.at("policy"), origin + ".policy", sp);
    return MindBackend::make_scripted(sp);
  }
  if (kind != "remote")
    throw Error(Err::Config, origin + ": 'kind' must be \"scripted\" or \"remote\"");
  RemoteConfig rc;
  rc.endpoint_url = detail::require_string(doc, "endpoint_url", origin);
  rc.model_id = detail::string_or(doc, "model_id", rc.model_id, origin);
  rc.api_key_ref = detail::string_or(doc, "api_key_ref", rc.api_key_ref, origin);
  rc.timeout_ms = static_cast<int>(
      detail::number_or(doc, "timeout_ms", static_cast<double>(rc.timeout_ms), origin));
  rc.max_tokens = static_cast<int>(
      detail::number_or(doc, "max_tokens", static_cast<double>(rc.max_tokens), origin));
  if (rc.timeout_ms <= 0) throw Error(Err::Config, origin + ": 'timeout_ms' must be positive");
  return MindBackend::make_remote(rc);
}

inline nlohmann::ordered_json backend_to_json(const MindBackend& b) {
  if (b.kind == MindBackend::Kind::Scripted)
    return {{"kind", "scripted"}, {"policy", policy_to_json(b.scripted)}};
  return {{"kind", "remote"},
          {"endpoint_url", b.remote.endpoint_url},
          {"model_id", b.remote.model_id},
          {"api_key_ref", b.remote.api_key_ref},
          {"timeout_ms", b.remote.timeout_ms},
          {"max_tokens", b.remote.max_tokens}};
}

// ---------------------------------------------------------------------------
// Run manifests

/// Everything a flight needs, frozen. Replaying one manifest twice must
/// produce byte-identical logs (for the scripted backend). Beyond the input
/// paths as given on the command line, the resolved persona/environment/sim
/// bodies are inlined so a replay cannot drift when the files change.
struct RunManifest {
  std::string mode = "sim";  // "sim" or "live"
  std::string persona_path;
  std::string env_path;    // sim mode only
  std::string robot_url;   // live mode only
  PersonaSpec persona;     // resolved
  Environment environment; // resolved, sim mode only
  MindBackend backend;
  SimConfig sim;
  double duration_s = 60.0;
  std::uint64_t seed = 1;
  double fov_deg = 160.0;
  double max_range_m = 8.0;
  std::string out_log_path = "flight.jsonl";
  std::string observations_path;     // defaults to out_log_path + ".obs.jsonl"
  std::string started_at;            // ISO 8601 UTC, informational
  std::string finished_at;           // ISO 8601 UTC, informational
  std::string git_describe_of_build; // informational

  std::string effective_observations_path() const {
    if (!observations_path.empty()) return observations_path;
    return out_log_path + ".obs.jsonl";
  }
};

inline constexpr std::string_view kManifestKind = "sg-run-manifest";
inline constexpr int kManifestVersion = 1;

inline nlohmann::ordered_json manifest_to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["kind"] = kManifestKind;
  j["version"] = kManifestVersion;
  j["mode"] = m.mode;
  j["persona_path"] = m.persona_path;
  if (m.mode == "sim") j["env_path"] = m.env_path;
  if (m.mode == "live") j["robot_url"] = m.robot_url;
  j["duration_s"] = m.duration_s;
  j["seed"] = m.seed;
  j["out_log_path"] = m.out_log_path;
  j["observations_path"] = m.effective_observations_path();
  j["observe"] = {{"fov_deg", m.fov_deg}, {"max_range_m", m.max_range_m}};
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["git_describe_of_build"] = m.git_describe_of_build;
  j["backend"] = backend_to_json(m.backend);
  j["sim"] = sim_config_to_json(m.sim);
  j["persona"] = persona_to_json(m.persona);
  if (m.mode == "sim") j["environment"] = environment_to_json(m.environment);
  return j;
}

inline RunManifest manifest_from_json(const nlohmann::json& j, const std::string& origin) {
  if (detail::string_or(j, "kind", "", origin) != kManifestKind)
    throw Error(Err::Config, origin + ": not a run manifest (kind mismatch)");
  int version = static_cast<int>(detail::require_number(j, "version", origin));
  if (version != kManifestVersion)
    throw Error(Err::Config, origin + ": unsupported manifest version " + std::to_string(version));
  RunManifest m;
  m.mode = detail::string_or(j, "mode", "sim", origin);
  if (m.mode != "sim" && m.mode != "live")
    throw Error(Err::Config, origin + ": 'mode' must be \"sim\" or \"live\"");
  m.persona_path = detail::string_or(j, "persona_path", "", origin);
  m.env_path = detail::string_or(j, "env_path", "", origin);
  m.robot_url = detail::string_or(j, "robot_url", "", origin);
  m.duration_s = detail::require_number(j, "duration_s", origin);
  if (m.duration_s <= 0.0) throw Error(Err::Config, origin + ": 'duration_s' must be positive");
  m.seed = static_cast<std::uint64_t>(detail::require_number(j, "seed", origin));
  if (j.contains("observe")) {
    m.fov_deg = detail::number_or(j.at("observe"), "fov_deg", m.fov_deg, origin + ".observe");
    m.max_range_m =
        detail::number_or(j.at("observe"), "max_range_m", m.max_range_m, origin + ".observe");
  }
  m.out_log_path = detail::string_or(j, "out_log_path", m.out_log_path, origin);
  m.observations_path = detail::string_or(j, "observations_path", "", origin);
  m.started_at = detail::string_or(j, "started_at", "", origin);
  m.finished_at = detail::string_or(j, "finished_at", "", origin);
  m.git_describe_of_build = detail::string_or(j, "git_describe_of_build", "", origin);
  m.backend = backend_from_doc(detail::require(j, "backend", origin), origin + ".backend");
  m.sim = sim_config_from_doc(detail::require(j, "sim", origin), origin + ".sim");
  m.persona = persona_from_doc(detail::require(j, "persona", origin), origin + ".persona");
  if (m.mode == "sim") {
    m.environment =
        environment_from_doc(detail::require(j, "environment", origin), origin + ".environment");
  } else if (m.robot_url.empty()) {
    throw Error(Err::Config, origin + ": live manifests need 'robot_url'");
  }
  return m;
}

inline void write_manifest(const std::string& path, const RunManifest& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Err::Config, "cannot write " + path);
  out << manifest_to_json(m).dump(2) << "\n";
}

inline RunManifest read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Err::Config, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Err::Config, path + ": invalid JSON: " + e.what());
  }
  return manifest_from_json(j, path);
}

}  // namespace sg

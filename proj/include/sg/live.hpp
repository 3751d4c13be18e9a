#pragma once

// Live flight: the mind loop driven over a robot link instead of the
// in-process simulator. Wall-clock time replaces simulated time, the camera
// frame stream replaces rendered panoramas, and pose stays null because the
// robot does not report one.

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sg/core.hpp"
#include "sg/flight.hpp"
#include "sg/link.hpp"
#include "sg/logio.hpp"
#include "sg/mind.hpp"
#include "sg/rng.hpp"

namespace sg {

struct LiveConfig {
  int connect_timeout_ms = 5000;
  int frame_timeout_ms = 15000;
  int obs_wait_ms = 5000;  // scripted minds need an observation line first
};

/// Flies a persona against the robot at `robot_url` for `duration_s` wall
/// seconds. Records stream to `writer` when given so a dropped link still
/// leaves a log behind; observation lines are mirrored into the sidecar
/// list. Seed handling matches the simulated path so a scripted persona
/// behaves identically given identical percepts.
inline FlightLog run_live_flight(const PersonaSpec& persona, const MindBackend& backend,
                                 const std::string& robot_url, double duration_s,
                                 std::uint64_t seed, FlightLogWriter* writer = nullptr,
                                 const LiveConfig& cfg = {}) {
  if (duration_s <= 0) throw Error(Err::Config, "duration_s must be positive");

  MindBackend effective = backend;
  if (effective.kind == MindBackend::Kind::Scripted)
    effective.scripted.rng_seed = backend.scripted.rng_seed ^ derive_seed(seed, "policy");

  FlightLog log;
  log.persona_id = persona.id;

  LinkClient link;
  link.connect(robot_url, cfg.connect_timeout_ms);

  auto wall_start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                                 wall_start)
        .count();
  };

  auto mirror_observation = [&](const std::optional<Observation>& obs) {
    if (!obs) return;
    if (!log.observations.empty() &&
        log.observations.back().timestamp_ms == obs->timestamp_ms)
      return;
    log.observations.push_back(*obs);
  };

  // First frame doubles as the preamble panorama.
  std::vector<std::uint8_t> frame = link.next_frame(cfg.frame_timeout_ms);
  mirror_observation(link.latest_observation());

  Percept first_percept;
  if (effective.kind == MindBackend::Kind::Scripted) {
    // Commands need scene entities; wait for the first observation line.
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(cfg.obs_wait_ms);
    while (!link.latest_observation()) {
      if (std::chrono::steady_clock::now() >= deadline)
        throw Error(Err::Config,
                    "scripted backend needs observation lines from the robot; none arrived");
      link.pump(100);
      mirror_observation(link.latest_observation());
    }
    first_percept = *link.latest_observation();
  } else {
    first_percept = JpegBytes(frame);
  }

  MindSession session = start_session(effective, persona, first_percept);

  std::int64_t prev_t_ms = -1;
  while (elapsed_ms() < static_cast<std::int64_t>(duration_s * 1000.0)) {
    try {
      frame = link.next_frame(cfg.frame_timeout_ms);
    } catch (const Error& e) {
      log.truncated = true;
      log.truncation_detail = e.what();
      log.truncation_error = e.code();
      break;
    }
    mirror_observation(link.latest_observation());

    Percept percept;
    if (effective.kind == MindBackend::Kind::Scripted)
      percept = *link.latest_observation();
    else
      percept = JpegBytes(frame);

    Decision decision;
    try {
      decision = session.decide(percept);
    } catch (const Error& e) {
      log.truncated = true;
      log.truncation_detail = e.what();
      log.truncation_error = e.code();
      break;
    }

    try {
      link.send_command(decision.action);
    } catch (const Error& e) {
      log.truncated = true;
      log.truncation_detail = e.what();
      log.truncation_error = e.code();
      break;
    }

    FlightRecord r;
    r.t_ms = elapsed_ms();
    if (r.t_ms <= prev_t_ms) r.t_ms = prev_t_ms + 1;
    prev_t_ms = r.t_ms;
    r.persona_id = persona.id;
    r.action = decision.action;
    r.reason = decision.reason;
    r.latency_ms = decision.latency_ms;
    r.pose = std::nullopt;
    auto obs = link.latest_observation();
    r.human_visible = obs && obs->has_human();
    r.collision = false;
    if (writer) writer->write(r);
    log.records.push_back(std::move(r));
  }

  log.total_steps = log.records.size();
  log.parse_failures = session.parse_failure_count();
  log.transport_failures = session.transport_failure_count();
  link.close();
  return log;
}

}  // namespace sg

#pragma once

// Simulated flight loop. Timing reproduces the deployment cadence with its
// plan-to-execution gap: the mind sees the world at t_k, thinks for L_k while
// the previous action keeps acting on the physics, and its decision takes
// effect at t_k + L_k, where it holds until the next decision lands.

#include <cmath>
#include <optional>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sg/core.hpp"
#include "sg/mind.hpp"
#include "sg/rng.hpp"
#include "sg/sim.hpp"

namespace sg {

struct FlightLog {
  std::string persona_id;
  std::vector<FlightRecord> records;
  /// One observation per record: what the mind saw when it produced it.
  std::vector<Observation> observations;
  std::uint64_t collision_steps = 0;   // dt steps that ended in a collision
  std::uint64_t total_steps = 0;
  std::uint64_t parse_failures = 0;
  std::uint64_t transport_failures = 0;
  bool truncated = false;  // a mind or link error ended the run before duration_s
  std::string truncation_detail;
  std::optional<Err> truncation_error;

  double collision_rate() const {
    return total_steps == 0 ? 0.0 : static_cast<double>(collision_steps) / static_cast<double>(total_steps);
  }
};

/// Runs one persona for duration_s of simulated time and returns its log.
/// The run seed fans out into independent latency and policy streams, so two
/// calls with identical inputs produce identical records byte for byte.
inline FlightLog run_flight(const PersonaSpec& persona, const MindBackend& backend,
                            const Environment& env, double duration_s, std::uint64_t seed,
                            const SimConfig& cfg = {}, double fov_deg = 160.0,
                            double max_range_m = 8.0) {
  if (duration_s <= 0.0) throw Error(Err::Config, "flight duration must be positive");

  Simulator sim(env, cfg);
  Rng latency_rng(derive_seed(seed, "latency"));

  MindBackend eff = backend;
  bool scripted = backend.kind == MindBackend::Kind::Scripted;
  if (scripted) eff.scripted.rng_seed = backend.scripted.rng_seed ^ derive_seed(seed, "policy");

  FlightLog log;
  log.persona_id = persona.id;

  MindSession session = start_session(eff, persona, Percept{sim.observe(360.0, max_range_m)});

  double t = 0.0;
  std::int64_t prev_ms = -1;
  while (true) {
    Observation obs = sim.observe(fov_deg, max_range_m);

    Decision d;
    try {
      d = session.decide(Percept{obs});
    } catch (const Error& e) {
      log.truncated = true;
      log.truncation_detail = e.what();
      log.truncation_error = e.code();
      break;
    }

    double think_s;
    if (scripted) {
      think_s = cfg.latency.sample(latency_rng);
      d.latency_ms = std::llround(think_s * 1000.0);
    } else {
      think_s = static_cast<double>(std::max<std::int64_t>(d.latency_ms, 1)) / 1000.0;
    }

    double t_apply = t + think_s;
    if (t_apply > duration_s) {
      sim.run_until(duration_s);
      break;
    }

    // The previous action keeps driving the physics through the think window.
    bool collided = sim.run_until(t_apply);
    sim.set_active(d.action);

    std::int64_t t_ms = std::llround(t_apply * 1000.0);
    if (t_ms <= prev_ms) t_ms = prev_ms + 1;
    prev_ms = t_ms;

    log.records.push_back(FlightRecord{t_ms, persona.id, d.action, d.reason, d.latency_ms,
                                       sim.state().pose(), obs.has_human(), collided});
    log.observations.push_back(std::move(obs));
    t = t_apply;
  }

  log.collision_steps = sim.collision_count();
  log.total_steps = static_cast<std::uint64_t>(std::llround(sim.time_s() / cfg.dt_s));
  log.parse_failures = session.parse_failure_count();
  log.transport_failures = session.transport_failure_count();
  return log;
}

}  // namespace sg

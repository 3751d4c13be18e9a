#pragma once

// The deterministic scripted persona: a total decision procedure over one
// observation. Disposition comes from ScriptedPolicyParams instead of a
// prompt, so behavior is reproducible per seed.

#include <cmath>
#include <span>
#include <vector>

#include "sg/core.hpp"
#include "sg/phrases.hpp"
#include "sg/rng.hpp"

namespace sg {

/// Rule-1 safety envelope: anything Wall/Obstacle closer than this inside
/// the cone triggers an avoidance turn. Sized so the blimp at top speed
/// (0.5 m/s) can clear within one ~2.8 s decision cycle.
inline constexpr double kProximityThresholdM = 1.0;
inline constexpr double kProximityConeDeg = 30.0;
/// Steering: head straight when the target is inside this half-angle,
/// otherwise turn toward it.
inline constexpr double kSteerStraightDeg = 20.0;

struct PolicyOutcome {
  Decision decision;
  PolicyRule rule = PolicyRule::Explore;
};

namespace detail {

inline Action steer_toward(double bearing_deg) {
  if (std::fabs(bearing_deg) < kSteerStraightDeg) return Action::Forward;
  return bearing_deg > 0.0 ? Action::TurnRight : Action::TurnLeft;
}

inline Action turn_away(double bearing_deg) {
  // Threat on the right (or dead ahead) -> turn left, and vice versa.
  return bearing_deg >= 0.0 ? Action::TurnLeft : Action::TurnRight;
}

}  // namespace detail

/// Decision procedure, in priority order:
///  1. Wall/Obstacle closer than 1.0 m inside +/-30 deg -> turn away from it.
///  2. Human visible -> approach with p=approach_human_prob (forward when
///     |bearing| < 20 deg, else turn toward); otherwise avoid, vertically
///     (Up) with p=vertical_avoid_prob, else turn away.
///  3. Contemplative stop with p=stop_prob.
///  4. Explore: pick one OpenSpace entity with weight range^explore_bias and
///     steer toward it; with no open space in view, rotate toward the deepest
///     visible entity (plowing forward while boxed in just grinds the wall).
/// Total function; the reason comes from the voice's phrase table.
inline PolicyOutcome scripted_policy_outcome(const ScriptedPolicyParams& params,
                                             const Observation& obs, Rng& rng,
                                             std::string_view voice = "cloud") {
  PolicyOutcome out;

  // Rule 1: proximity threat.
  const SceneEntity* threat = nullptr;
  for (const auto& e : obs.entities) {
    if (e.kind != EntityKind::Wall && e.kind != EntityKind::Obstacle) continue;
    if (e.range_m >= kProximityThresholdM) continue;
    if (std::fabs(e.bearing_deg) > kProximityConeDeg) continue;
    if (!threat || e.range_m < threat->range_m) threat = &e;
  }
  if (threat) {
    out.rule = PolicyRule::ObstacleAvoid;
    out.decision.action = detail::turn_away(threat->bearing_deg);
    out.decision.reason = phrase_for(voice, out.rule, out.decision.action);
    return out;
  }

  // Rule 2: human reaction.
  if (const SceneEntity* human = obs.nearest_human()) {
    if (rng.bernoulli(params.approach_human_prob)) {
      out.rule = PolicyRule::HumanApproach;
      out.decision.action = detail::steer_toward(human->bearing_deg);
    } else {
      out.rule = PolicyRule::HumanAvoid;
      out.decision.action =
          rng.bernoulli(params.vertical_avoid_prob) ? Action::Up : detail::turn_away(human->bearing_deg);
    }
    out.decision.reason = phrase_for(voice, out.rule, out.decision.action);
    return out;
  }

  // Rule 3: contemplation.
  if (rng.bernoulli(params.stop_prob)) {
    out.rule = PolicyRule::Contemplate;
    out.decision.action = Action::Stop;
    out.decision.reason = phrase_for(voice, out.rule, out.decision.action);
    return out;
  }

  // Rule 4: explore the open space.
  out.rule = PolicyRule::Explore;
  std::vector<const SceneEntity*> open;
  for (const auto& e : obs.entities)
    if (e.kind == EntityKind::OpenSpace) open.push_back(&e);
  if (open.empty()) {
    const SceneEntity* deepest = nullptr;
    for (const auto& e : obs.entities)
      if (!deepest || e.range_m > deepest->range_m) deepest = &e;
    out.decision.action = deepest == nullptr ? Action::Forward
                          : deepest->bearing_deg >= 0.0 ? Action::TurnRight
                                                        : Action::TurnLeft;
  } else {
    std::vector<double> weights;
    weights.reserve(open.size());
    for (const auto* e : open) weights.push_back(std::pow(e->range_m, params.explore_bias));
    const SceneEntity* target = open[rng.weighted_index(weights)];
    out.decision.action = detail::steer_toward(target->bearing_deg);
  }
  out.decision.reason = phrase_for(voice, out.rule, out.decision.action);
  return out;
}

inline Decision scripted_policy(const ScriptedPolicyParams& params, const Observation& obs,
                                Rng& rng, std::string_view voice = "cloud") {
  return scripted_policy_outcome(params, obs, rng, voice).decision;
}

}  // namespace sg

#pragma once

// Fixed per-persona phrase tables for scripted reasons, keyed by
// (rule fired, action). Deterministic on purpose: analytics must never
// depend on live text generation. Phrases are worded so the keyword
// fallback classifier (human/person; avoid/ascend/away; towards/greet)
// reads them the same way the geometric classifier does.

#include <string_view>

#include "sg/core.hpp"

namespace sg {

/// Which branch of the scripted decision procedure produced an action.
enum class PolicyRule : std::uint8_t {
  ObstacleAvoid,   // rule 1: wall/obstacle inside the safety cone
  HumanApproach,   // rule 2a
  HumanAvoid,      // rule 2b
  Contemplate,     // rule 3
  Explore,         // rule 4
};

inline const char* policy_rule_name(PolicyRule r) {
  switch (r) {
    case PolicyRule::ObstacleAvoid: return "ObstacleAvoid";
    case PolicyRule::HumanApproach: return "HumanApproach";
    case PolicyRule::HumanAvoid: return "HumanAvoid";
    case PolicyRule::Contemplate: return "Contemplate";
    case PolicyRule::Explore: return "Explore";
  }
  return "?";
}

namespace detail {

struct VoicePhrases {
  const char* obstacle_left;
  const char* obstacle_right;
  const char* approach_forward;
  const char* approach_left;
  const char* approach_right;
  const char* avoid_up;
  const char* avoid_left;
  const char* avoid_right;
  const char* contemplate;
  const char* explore_forward;
  const char* explore_left;
  const char* explore_right;
};

inline constexpr VoicePhrases kCloudVoice = {
    "Leaning left, away from the looming wall",
    "Leaning right, away from the looming wall",
    "Drifting towards the friendly person ahead",
    "Curving left towards the person over there",
    "Curving right towards the person over there",
    "Ascending softly to give the person below some space",
    "Turning left, away from the human, shy as mist",
    "Turning right, away from the human, shy as mist",
    "Pausing to let my cloudy thoughts settle",
    "Onward into the wide and easy air",
    "Swinging left where the space opens up",
    "Swinging right where the space opens up",
};

inline constexpr VoicePhrases kCompanionVoice = {
    "Quick left, away from that wall",
    "Quick right, away from that wall",
    "Straight towards my favorite human, hello!",
    "Wheeling left to greet the person",
    "Wheeling right to greet the person",
    "Ascending politely above the person",
    "A bashful left turn, away from the human",
    "A bashful right turn, away from the human",
    "Waiting here, hoping someone wanders by",
    "Zooming ahead to see who else is around",
    "Peeking left for someone new",
    "Peeking right for someone new",
};

inline constexpr VoicePhrases kObserverVoice = {
    "Careful left, away from the wall",
    "Careful right, away from the wall",
    "Inching towards the person, just this once",
    "A wary left drift towards the person",
    "A wary right drift towards the person",
    "Ascending quickly to avoid the person below",
    "Slipping left, away from the human",
    "Slipping right, away from the human",
    "Holding still, watching from a safe distance",
    "Gliding on through the quiet open air",
    "Easing left into emptier air",
    "Easing right into emptier air",
};

inline constexpr VoicePhrases kExplorerVoice = {
    "Banking left off the wall ahead",
    "Banking right off the wall ahead",
    "Drifting towards the person in my path",
    "Angling left towards the passing person",
    "Angling right towards the passing person",
    "Ascending over the person, places to be",
    "Sliding left past the human, away I go",
    "Sliding right past the human, away I go",
    "Idling a moment over nothing in particular",
    "Onward, the far corner looks promising",
    "Cutting left toward unexplored air",
    "Cutting right toward unexplored air",
};

inline const VoicePhrases& voice_table(std::string_view voice) {
  if (voice == "companion") return kCompanionVoice;
  if (voice == "observer") return kObserverVoice;
  if (voice == "explorer") return kExplorerVoice;
  return kCloudVoice;
}

}  // namespace detail

/// Deterministic reason text for one (voice, rule, action) key.
inline const char* phrase_for(std::string_view voice, PolicyRule rule, Action action) {
  const detail::VoicePhrases& t = detail::voice_table(voice);
  switch (rule) {
    case PolicyRule::ObstacleAvoid:
      return action == Action::TurnRight ? t.obstacle_right : t.obstacle_left;
    case PolicyRule::HumanApproach:
      if (action == Action::TurnLeft) return t.approach_left;
      if (action == Action::TurnRight) return t.approach_right;
      return t.approach_forward;
    case PolicyRule::HumanAvoid:
      if (action == Action::TurnLeft) return t.avoid_left;
      if (action == Action::TurnRight) return t.avoid_right;
      return t.avoid_up;
    case PolicyRule::Contemplate:
      return t.contemplate;
    case PolicyRule::Explore:
      if (action == Action::TurnLeft) return t.explore_left;
      if (action == Action::TurnRight) return t.explore_right;
      return t.explore_forward;
  }
  return "";
}

}  // namespace sg

#pragma once

// Shared domain types for the blimp ground station: the movement alphabet,
// decisions, scene observations, personas and flight-log records. Pure
// values, no I/O.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sg {

// ---------------------------------------------------------------------------
// Errors

enum class Err {
  Config,             // bad or missing config file / flag
  Schema,             // log line violates the published schema
  Parse,              // unparseable mind output
  Transport,          // network failure talking to a backend
  AckMismatch,        // preamble acknowledgment missing the ready phrase
  EmptyPanorama,      // start_session given an empty panorama
  BadUrl,             // malformed robot URL
  Refused,            // peer refused the connection
  Timeout,            // no data within the window
  LinkClosed,         // operation on a closed link
  CorruptFrame,       // frame failed the JPEG marker check
  ProtocolViolation,  // peer sent a frame the wire contract forbids
  Bind,               // emulator could not bind its listen address
  Degenerate,         // statistical input has a zero marginal
  Insufficient,       // too little data for the requested statistic
  Internal,
};

inline const char* err_name(Err e) {
  switch (e) {
    case Err::Config: return "ConfigError";
    case Err::Schema: return "SchemaViolation";
    case Err::Parse: return "ParseFailure";
    case Err::Transport: return "Transport";
    case Err::AckMismatch: return "AckMismatch";
    case Err::EmptyPanorama: return "EmptyPanorama";
    case Err::BadUrl: return "BadUrl";
    case Err::Refused: return "Refused";
    case Err::Timeout: return "Timeout";
    case Err::LinkClosed: return "LinkClosed";
    case Err::CorruptFrame: return "CorruptFrame";
    case Err::ProtocolViolation: return "ProtocolViolation";
    case Err::Bind: return "BindFailure";
    case Err::Degenerate: return "DegenerateTable";
    case Err::Insufficient: return "InsufficientData";
    case Err::Internal: return "Internal";
  }
  return "Unknown";
}

/// Exit codes are a stable public contract: 0 ok, 2 config, 3 link, 4 bind,
/// 5 schema; anything else maps to 1.
inline int exit_code_for(Err e) {
  switch (e) {
    case Err::Config: return 2;
    case Err::BadUrl:
    case Err::Refused:
    case Err::Timeout:
    case Err::LinkClosed:
    case Err::CorruptFrame:
    case Err::ProtocolViolation:
    case Err::Transport:
    case Err::AckMismatch: return 3;
    case Err::Bind: return 4;
    case Err::Schema: return 5;
    default: return 1;
  }
}

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& what)
      : std::runtime_error(std::string(err_name(code)) + ": " + what), code_(code) {}
  Err code() const { return code_; }
  int exit_code() const { return exit_code_for(code_); }

 private:
  Err code_;
};

// ---------------------------------------------------------------------------
// Action alphabet

/// The seven movements every layer shares. The wire payload, the log format
/// and the prompts all use the single-letter form.
enum class Action : std::uint8_t {
  Forward,    // f
  Reverse,    // r
  TurnLeft,   // l
  TurnRight,  // t
  Up,         // u
  Down,       // d
  Stop,       // s
};

inline constexpr std::array<Action, 7> kAllActions = {
    Action::Forward, Action::Reverse, Action::TurnLeft, Action::TurnRight,
    Action::Up,      Action::Down,    Action::Stop};

inline constexpr char letter_from_action(Action a) {
  switch (a) {
    case Action::Forward: return 'f';
    case Action::Reverse: return 'r';
    case Action::TurnLeft: return 'l';
    case Action::TurnRight: return 't';
    case Action::Up: return 'u';
    case Action::Down: return 'd';
    case Action::Stop: return 's';
  }
  return '?';
}

/// Letter -> action. Returns nullopt for anything outside {f,r,l,t,u,d,s}
/// (the UnknownLetter condition), which signals malformed mind output.
inline constexpr std::optional<Action> action_from_letter(char c) {
  switch (c) {
    case 'f': return Action::Forward;
    case 'r': return Action::Reverse;
    case 'l': return Action::TurnLeft;
    case 't': return Action::TurnRight;
    case 'u': return Action::Up;
    case 'd': return Action::Down;
    case 's': return Action::Stop;
    default: return std::nullopt;
  }
}

inline const char* action_name(Action a) {
  switch (a) {
    case Action::Forward: return "Forward";
    case Action::Reverse: return "Reverse";
    case Action::TurnLeft: return "TurnLeft";
    case Action::TurnRight: return "TurnRight";
    case Action::Up: return "Up";
    case Action::Down: return "Down";
    case Action::Stop: return "Stop";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Category schemes

/// A total, stable grouping of the 7 actions into named categories, used by
/// the behavioral-fingerprint analysis. The default 3-category scheme
/// (Advance={f}, Maneuver={l,t,u,d,r}, Halt={s}) is a reconstruction: it is
/// the grouping that makes a 3-persona fingerprint test come out at df=4.
struct CategoryScheme {
  std::string name;
  std::vector<std::string> categories;
  std::array<int, 7> index_by_action{};  // indexed by Action value

  static const CategoryScheme& advance_maneuver_halt() {
    static const CategoryScheme s = [] {
      CategoryScheme c;
      c.name = "advance-maneuver-halt";
      c.categories = {"Advance", "Maneuver", "Halt"};
      c.index_by_action = {0, 1, 1, 1, 1, 1, 2};  // f r l t u d s
      return c;
    }();
    return s;
  }

  static const CategoryScheme& per_action() {
    static const CategoryScheme s = [] {
      CategoryScheme c;
      c.name = "per-action";
      for (Action a : kAllActions) c.categories.emplace_back(1, letter_from_action(a));
      c.index_by_action = {0, 1, 2, 3, 4, 5, 6};
      return c;
    }();
    return s;
  }

  static const CategoryScheme* by_name(std::string_view n) {
    if (n == advance_maneuver_halt().name) return &advance_maneuver_halt();
    if (n == per_action().name) return &per_action();
    return nullptr;
  }
};

inline int categorize_action(Action a, const CategoryScheme& scheme = CategoryScheme::advance_maneuver_halt()) {
  return scheme.index_by_action[static_cast<std::size_t>(a)];
}

// ---------------------------------------------------------------------------
// Percepts

enum class EntityKind : std::uint8_t { Wall, Window, Landmark, Human, Obstacle, OpenSpace };

inline const char* entity_kind_name(EntityKind k) {
  switch (k) {
    case EntityKind::Wall: return "Wall";
    case EntityKind::Window: return "Window";
    case EntityKind::Landmark: return "Landmark";
    case EntityKind::Human: return "Human";
    case EntityKind::Obstacle: return "Obstacle";
    case EntityKind::OpenSpace: return "OpenSpace";
  }
  return "?";
}

inline std::optional<EntityKind> entity_kind_from_name(std::string_view s) {
  if (s == "Wall") return EntityKind::Wall;
  if (s == "Window") return EntityKind::Window;
  if (s == "Landmark") return EntityKind::Landmark;
  if (s == "Human") return EntityKind::Human;
  if (s == "Obstacle") return EntityKind::Obstacle;
  if (s == "OpenSpace") return EntityKind::OpenSpace;
  return std::nullopt;
}

/// One seen thing. Bearing 0 = straight ahead, positive = to the right.
/// For OpenSpace the range is the free-travel distance along that bearing.
struct SceneEntity {
  EntityKind kind = EntityKind::Obstacle;
  double bearing_deg = 0.0;
  double range_m = 1.0;  // strictly positive
  std::string label;
};

/// The structured stand-in for one camera frame.
struct Observation {
  std::vector<SceneEntity> entities;
  double fov_deg = 160.0;
  std::int64_t timestamp_ms = 0;

  bool has_human() const {
    for (const auto& e : entities)
      if (e.kind == EntityKind::Human) return true;
    return false;
  }

  /// Human with the smallest range, nullptr when none is visible.
  const SceneEntity* nearest_human() const {
    const SceneEntity* best = nullptr;
    for (const auto& e : entities)
      if (e.kind == EntityKind::Human && (!best || e.range_m < best->range_m)) best = &e;
    return best;
  }
};

/// The four-category semantic scene summary held as session state.
struct MentalMap {
  std::vector<std::string> boundaries;
  std::vector<std::string> landmarks;
  std::vector<std::string> fly_zones;
  std::vector<std::string> obstacles;
};

// ---------------------------------------------------------------------------
// Personas

/// Deterministic stand-in for prompt-induced disposition. Identical
/// (params, observation sequence, seed) must yield identical decisions.
struct ScriptedPolicyParams {
  double approach_human_prob = 0.5;   // in [0,1]
  double stop_prob = 0.1;             // in [0,1]
  double vertical_avoid_prob = 0.5;   // in [0,1]
  double explore_bias = 2.0;          // >= 0
  std::uint64_t rng_seed = 1;
};

struct PersonaSpec {
  std::string id;
  std::string preamble_prompt;
  std::string directional_prompt;
  ScriptedPolicyParams policy;
  std::string voice = "cloud";  // phrase-table voice for scripted reasons
};

// ---------------------------------------------------------------------------
// Decisions and flight records

/// One parsed unit of cognition: a command plus its narrative reason.
struct Decision {
  Action action = Action::Stop;
  std::string reason;            // trimmed; may be empty
  std::int64_t latency_ms = 0;   // wall-clock span of one mind round-trip
};

struct Pose {
  double x_m = 0.0;
  double y_m = 0.0;
  double z_m = 0.0;
  double heading_deg = 0.0;
};

/// One timestamped log row; the unit of all analytics. Pose is present
/// exactly when the record came from a simulated flight.
struct FlightRecord {
  std::int64_t t_ms = 0;  // strictly increasing within one log
  std::string persona_id;
  Action action = Action::Stop;
  std::string reason;
  std::int64_t latency_ms = 0;
  std::optional<Pose> pose;
  bool human_visible = false;
  bool collision = false;
};

}  // namespace sg

#pragma once

// Discrete-time blimp kinematics in an indoor environment. The integrator
// keeps momentum and arcing turns faithful: the agent's mind never sees this
// state, which is exactly what makes the plan-to-execution gap observable.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sg/core.hpp"
#include "sg/rng.hpp"

namespace sg {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDegToRad = kPi / 180.0;
/// Margin kept from floor and ceiling when clamping altitude.
inline constexpr double kVerticalMarginM = 0.2;
/// Projection epsilon used when pushing the blimp back inside bounds.
inline constexpr double kWallEpsM = 1e-3;
/// A bearing sector counts as open space when the free ray is at least this long.
inline constexpr double kOpenSpaceMinM = 5.5;
/// Bearing sampling step for observations.
inline constexpr double kRayStepDeg = 5.0;

inline double wrap_deg_360(double d) {
  d = std::fmod(d, 360.0);
  if (d < 0.0) d += 360.0;
  return d;
}

/// Wraps into (-180, 180].
inline double wrap_deg_180(double d) {
  d = std::fmod(d, 360.0);
  if (d > 180.0) d -= 360.0;
  if (d <= -180.0) d += 360.0;
  return d;
}

// ---------------------------------------------------------------------------
// State and configuration

/// Heading 0 points along +y, 90 along +x (clockwise-positive, matching the
/// bearing convention where positive is to the right).
struct BlimpState {
  double x_m = 0.0;
  double y_m = 0.0;
  double z_m = 1.5;
  double heading_deg = 0.0;       // in [0, 360)
  double v_forward_mps = 0.0;     // signed, along heading
  double v_vertical_mps = 0.0;
  double omega_dps = 0.0;

  Pose pose() const { return Pose{x_m, y_m, z_m, heading_deg}; }
};

struct ObstacleShape {
  enum class Kind { Circle, Box } kind = Kind::Circle;
  std::string label;
  double cx = 0.0, cy = 0.0;
  double radius = 0.5;            // Circle
  double half_x = 0.5, half_y = 0.5;  // Box half extents
  bool is_landmark = false;       // also emitted as a Landmark entity

  bool contains(double x, double y) const {
    if (kind == Kind::Circle) {
      double dx = x - cx, dy = y - cy;
      return dx * dx + dy * dy < radius * radius;  // open interior
    }
    return std::fabs(x - cx) < half_x && std::fabs(y - cy) < half_y;
  }
};

struct HumanAgent {
  std::string label = "human";
  double x = 0.0, y = 0.0;
  std::vector<std::array<double, 2>> waypoints;  // looped; empty = stationary
  double speed_mps = 0.8;
  std::size_t next_waypoint = 0;
};

struct LandmarkDef {
  std::string label;
  double x = 0.0, y = 0.0;
};

struct Environment {
  std::string name = "room";
  double width_m = 10.0;   // bounds: [0, width] x [0, height]
  double height_m = 10.0;
  double ceiling_m = 4.0;
  Pose spawn{5.0, 5.0, 1.5, 0.0};
  std::vector<ObstacleShape> obstacles;
  std::vector<HumanAgent> humans;
  std::vector<LandmarkDef> landmarks;

  /// Throws ConfigError when the spawn is not collision-free or an obstacle
  /// sticks out of bounds.
  void validate() const {
    if (width_m <= 0.0 || height_m <= 0.0) throw Error(Err::Config, name + ": bounds must be positive");
    if (ceiling_m <= 2.0 * kVerticalMarginM) throw Error(Err::Config, name + ": ceiling too low");
    if (spawn.x_m <= 0.0 || spawn.x_m >= width_m || spawn.y_m <= 0.0 || spawn.y_m >= height_m)
      throw Error(Err::Config, name + ": spawn outside bounds");
    for (const auto& o : this->obstacles) {
      double lo_x = o.kind == ObstacleShape::Kind::Circle ? o.cx - o.radius : o.cx - o.half_x;
      double hi_x = o.kind == ObstacleShape::Kind::Circle ? o.cx + o.radius : o.cx + o.half_x;
      double lo_y = o.kind == ObstacleShape::Kind::Circle ? o.cy - o.radius : o.cy - o.half_y;
      double hi_y = o.kind == ObstacleShape::Kind::Circle ? o.cy + o.radius : o.cy + o.half_y;
      if (lo_x < 0.0 || hi_x > width_m || lo_y < 0.0 || hi_y > height_m)
        throw Error(Err::Config, name + ": obstacle '" + o.label + "' outside bounds");
      if (o.contains(spawn.x_m, spawn.y_m))
        throw Error(Err::Config, name + ": spawn inside obstacle '" + o.label + "'");
    }
    for (const auto& h : humans)
      if (h.x < 0.0 || h.x > width_m || h.y < 0.0 || h.y > height_m)
        throw Error(Err::Config, name + ": human '" + h.label + "' outside bounds");
  }
};

struct LatencyModel {
  double mean_s = 2.8;
  double sd_s = 0.3;

  /// One think-time draw, clamped to stay positive.
  double sample(Rng& rng) const { return std::max(0.001, rng.normal(mean_s, sd_s)); }
};

struct SimConfig {
  double dt_s = 0.1;
  double thrust_accel_mps2 = 0.15;
  double drag_per_s = 0.3;
  double turn_rate_dps = 20.0;
  double vertical_rate_mps = 0.2;
  LatencyModel latency;
  std::uint64_t rng_seed = 1;
};

// ---------------------------------------------------------------------------
// Collision resolution

/// Projects the blimp back to the nearest free point when its center sits
/// inside an obstacle or beyond the bounds, zeroing forward speed. Open
/// interiors collide; boundaries do not.
inline std::pair<BlimpState, bool> check_collision(BlimpState s, const Environment& env) {
  bool collided = false;

  for (const auto& o : env.obstacles) {
    if (!o.contains(s.x_m, s.y_m)) continue;
    collided = true;
    if (o.kind == ObstacleShape::Kind::Circle) {
      double dx = s.x_m - o.cx, dy = s.y_m - o.cy;
      double d = std::sqrt(dx * dx + dy * dy);
      if (d < 1e-12) {
        s.x_m = o.cx + o.radius;  // degenerate center hit: push along +x
        s.y_m = o.cy;
      } else {
        s.x_m = o.cx + dx / d * o.radius;
        s.y_m = o.cy + dy / d * o.radius;
      }
    } else {
      // Pop out through the face with the least penetration.
      double pen_east = o.half_x - (s.x_m - o.cx);
      double pen_west = o.half_x + (s.x_m - o.cx);
      double pen_north = o.half_y - (s.y_m - o.cy);
      double pen_south = o.half_y + (s.y_m - o.cy);
      double m = std::min({pen_east, pen_west, pen_north, pen_south});
      if (m == pen_east) s.x_m = o.cx + o.half_x;
      else if (m == pen_west) s.x_m = o.cx - o.half_x;
      else if (m == pen_north) s.y_m = o.cy + o.half_y;
      else s.y_m = o.cy - o.half_y;
    }
    // Rounding can land the popped point a few ulp inside the open interior,
    // where it would re-collide every step while parked; nudge it out.
    constexpr double inf = std::numeric_limits<double>::infinity();
    while (o.contains(s.x_m, s.y_m)) {
      s.x_m = std::nextafter(s.x_m, s.x_m > o.cx ? inf : -inf);
      s.y_m = std::nextafter(s.y_m, s.y_m > o.cy ? inf : -inf);
    }
  }

  if (s.x_m < 0.0 || s.x_m > env.width_m || s.y_m < 0.0 || s.y_m > env.height_m) {
    collided = true;
    s.x_m = std::clamp(s.x_m, kWallEpsM, env.width_m - kWallEpsM);
    s.y_m = std::clamp(s.y_m, kWallEpsM, env.height_m - kWallEpsM);
  }

  if (collided) s.v_forward_mps = 0.0;
  return {s, collided};
}

// ---------------------------------------------------------------------------
// Integration

struct StepResult {
  BlimpState state;
  bool collided = false;
};

/// One integration step under the active (held) action. Velocity follows the
/// exact relaxation of v' = a - drag*v over dt, position uses a trapezoid on
/// the velocity vector, so coarse and fine dt agree closely. Turns always
/// carry forward thrust: the blimp arcs, it never pivots.
inline StepResult step(const BlimpState& state, const Environment& env, Action active,
                       double dt_s, const SimConfig& cfg = {}) {
  BlimpState s = state;
  double accel = 0.0;
  double omega = 0.0;
  double v_vertical = 0.0;

  switch (active) {
    case Action::Forward: accel = cfg.thrust_accel_mps2; break;
    case Action::Reverse: accel = -cfg.thrust_accel_mps2; break;
    case Action::TurnLeft:
      accel = cfg.thrust_accel_mps2;
      omega = -cfg.turn_rate_dps;
      break;
    case Action::TurnRight:
      accel = cfg.thrust_accel_mps2;
      omega = cfg.turn_rate_dps;
      break;
    case Action::Up: v_vertical = cfg.vertical_rate_mps; break;
    case Action::Down: v_vertical = -cfg.vertical_rate_mps; break;
    case Action::Stop: break;
  }

  double v0 = s.v_forward_mps;
  if (cfg.drag_per_s > 0.0) {
    double v_inf = accel / cfg.drag_per_s;
    s.v_forward_mps = v_inf + (v0 - v_inf) * std::exp(-cfg.drag_per_s * dt_s);
  } else {
    s.v_forward_mps = v0 + accel * dt_s;
  }

  double h0 = s.heading_deg;
  s.omega_dps = omega;
  s.heading_deg = wrap_deg_360(h0 + omega * dt_s);

  double h0r = h0 * kDegToRad;
  double h1r = s.heading_deg * kDegToRad;
  s.x_m += 0.5 * dt_s * (v0 * std::sin(h0r) + s.v_forward_mps * std::sin(h1r));
  s.y_m += 0.5 * dt_s * (v0 * std::cos(h0r) + s.v_forward_mps * std::cos(h1r));

  s.v_vertical_mps = v_vertical;
  s.z_m = std::clamp(s.z_m + v_vertical * dt_s, kVerticalMarginM, env.ceiling_m - kVerticalMarginM);

  auto [resolved, collided] = check_collision(s, env);
  return {resolved, collided};
}

// ---------------------------------------------------------------------------
// Observation synthesis

namespace detail {

struct RayHit {
  double dist = 0.0;
  int wall = -1;      // 0 south (y=0), 1 east, 2 north, 3 west
  int obstacle = -1;  // index into env.obstacles
};

inline const char* wall_name(int id) {
  switch (id) {
    case 0: return "south wall";
    case 1: return "east wall";
    case 2: return "north wall";
    case 3: return "west wall";
  }
  return "wall";
}

/// First hit along (dx,dy) from (x,y), capped at max_range. Interior rays
/// always exit through exactly one wall.
inline RayHit raycast(double x, double y, double dx, double dy, const Environment& env,
                      double max_range) {
  RayHit hit;
  hit.dist = max_range;

  double t_wall = std::numeric_limits<double>::infinity();
  int wall = -1;
  if (dx > 1e-12) {
    t_wall = (env.width_m - x) / dx;
    wall = 1;
  } else if (dx < -1e-12) {
    t_wall = (0.0 - x) / dx;
    wall = 3;
  }
  if (dy > 1e-12) {
    double t = (env.height_m - y) / dy;
    if (t < t_wall) { t_wall = t; wall = 2; }
  } else if (dy < -1e-12) {
    double t = (0.0 - y) / dy;
    if (t < t_wall) { t_wall = t; wall = 0; }
  }
  if (wall >= 0 && t_wall <= hit.dist) {
    hit.dist = t_wall;
    hit.wall = wall;
  }

  for (std::size_t i = 0; i < env.obstacles.size(); ++i) {
    const auto& o = env.obstacles[i];
    double t = std::numeric_limits<double>::infinity();
    if (o.kind == ObstacleShape::Kind::Circle) {
      double ox = x - o.cx, oy = y - o.cy;
      double b = ox * dx + oy * dy;
      double c0 = ox * ox + oy * oy - o.radius * o.radius;
      double disc = b * b - c0;
      if (disc >= 0.0) {
        double root = -b - std::sqrt(disc);
        if (root > 1e-9) t = root;
      }
    } else {
      double t_enter = -std::numeric_limits<double>::infinity();
      double t_exit = std::numeric_limits<double>::infinity();
      bool miss = false;
      double lo[2] = {o.cx - o.half_x, o.cy - o.half_y};
      double hi[2] = {o.cx + o.half_x, o.cy + o.half_y};
      double org[2] = {x, y};
      double dir[2] = {dx, dy};
      for (int axis = 0; axis < 2 && !miss; ++axis) {
        if (std::fabs(dir[axis]) < 1e-12) {
          if (org[axis] <= lo[axis] || org[axis] >= hi[axis]) miss = true;
        } else {
          double t1 = (lo[axis] - org[axis]) / dir[axis];
          double t2 = (hi[axis] - org[axis]) / dir[axis];
          if (t1 > t2) std::swap(t1, t2);
          t_enter = std::max(t_enter, t1);
          t_exit = std::min(t_exit, t2);
        }
      }
      if (!miss && t_enter <= t_exit && t_enter > 1e-9) t = t_enter;
    }
    if (t < hit.dist) {
      hit.dist = t;
      hit.wall = -1;
      hit.obstacle = static_cast<int>(i);
    }
  }
  return hit;
}

inline double bearing_to(const BlimpState& s, double tx, double ty) {
  double world = std::atan2(tx - s.x_m, ty - s.y_m) / kDegToRad;
  return wrap_deg_180(world - s.heading_deg);
}

}  // namespace detail

/// Structured stand-in for one camera frame: every human, obstacle, landmark
/// and wall within range and field of view, plus OpenSpace entities for the
/// 3 widest unobstructed bearing sectors. No occlusion model.
inline Observation observe(const BlimpState& s, const Environment& env, double fov_deg = 160.0,
                           double max_range_m = 8.0) {
  Observation obs;
  obs.fov_deg = fov_deg;
  double half_fov = fov_deg / 2.0;

  // Bearing rays. A full panorama wraps; a sector includes both edge rays.
  bool full_circle = fov_deg >= 359.9;
  std::vector<double> bearings;
  if (full_circle) {
    for (double b = -180.0; b < 180.0 - 1e-9; b += kRayStepDeg) bearings.push_back(b);
  } else {
    for (double b = -half_fov; b <= half_fov + 1e-9; b += kRayStepDeg) bearings.push_back(b);
  }

  struct Ray {
    double bearing;
    detail::RayHit hit;
  };
  std::vector<Ray> rays;
  rays.reserve(bearings.size());
  for (double b : bearings) {
    double world = (s.heading_deg + b) * kDegToRad;
    rays.push_back({b, detail::raycast(s.x_m, s.y_m, std::sin(world), std::cos(world), env, max_range_m)});
  }

  // Wall entities: every ray hitting the same physical wall collapses into
  // one entity at that wall's closest ray, so an obstacle interrupting the
  // view cannot split a wall in two.
  for (int wall = 0; wall < 4; ++wall) {
    const Ray* nearest = nullptr;
    for (const auto& r : rays)
      if (r.hit.wall == wall && (!nearest || r.hit.dist < nearest->hit.dist)) nearest = &r;
    if (nearest)
      obs.entities.push_back(SceneEntity{EntityKind::Wall, nearest->bearing,
                                         std::max(nearest->hit.dist, 0.01),
                                         detail::wall_name(wall)});
  }

  // Obstacles: nearest surface point per shape (plus a Landmark twin when
  // the shape is a named landmark).
  for (const auto& o : env.obstacles) {
    double qx, qy;
    if (o.kind == ObstacleShape::Kind::Circle) {
      double dx = s.x_m - o.cx, dy = s.y_m - o.cy;
      double d = std::sqrt(dx * dx + dy * dy);
      if (d < 1e-12) { dx = 1.0; dy = 0.0; d = 1.0; }
      qx = o.cx + dx / d * o.radius;
      qy = o.cy + dy / d * o.radius;
    } else {
      qx = std::clamp(s.x_m, o.cx - o.half_x, o.cx + o.half_x);
      qy = std::clamp(s.y_m, o.cy - o.half_y, o.cy + o.half_y);
    }
    double range = std::hypot(qx - s.x_m, qy - s.y_m);
    double bearing = detail::bearing_to(s, qx, qy);
    if (range > max_range_m || std::fabs(bearing) > half_fov) continue;
    range = std::max(range, 0.01);
    obs.entities.push_back(SceneEntity{EntityKind::Obstacle, bearing, range, o.label});
    if (o.is_landmark)
      obs.entities.push_back(SceneEntity{EntityKind::Landmark, bearing, range, o.label});
  }

  for (const auto& lm : env.landmarks) {
    double range = std::hypot(lm.x - s.x_m, lm.y - s.y_m);
    double bearing = detail::bearing_to(s, lm.x, lm.y);
    if (range > max_range_m || std::fabs(bearing) > half_fov) continue;
    obs.entities.push_back(SceneEntity{EntityKind::Landmark, bearing, std::max(range, 0.01), lm.label});
  }

  for (const auto& h : env.humans) {
    double range = std::hypot(h.x - s.x_m, h.y - s.y_m);
    double bearing = detail::bearing_to(s, h.x, h.y);
    if (range > max_range_m || std::fabs(bearing) > half_fov) continue;
    obs.entities.push_back(SceneEntity{EntityKind::Human, bearing, std::max(range, 0.01), h.label});
  }

  // OpenSpace: maximal runs of rays whose free distance clears the
  // threshold; the 3 widest become entities at their central bearing.
  struct Run {
    std::size_t begin, len;
  };
  std::vector<Run> runs;
  std::size_t i = 0;
  while (i < rays.size()) {
    if (rays[i].hit.dist < kOpenSpaceMinM) { ++i; continue; }
    std::size_t j = i;
    while (j < rays.size() && rays[j].hit.dist >= kOpenSpaceMinM) ++j;
    runs.push_back({i, j - i});
    i = j;
  }
  // A full panorama is cyclic: a sector spanning the -180/+180 seam arrives
  // as a leading and a trailing run.
  bool wrapped = false;
  if (full_circle && runs.size() >= 2 && runs.front().begin == 0 &&
      runs.back().begin + runs.back().len == rays.size()) {
    wrapped = true;
  }
  std::vector<std::pair<double, std::size_t>> ranked;  // (width, central ray index)
  for (std::size_t k = 0; k < runs.size(); ++k) {
    if (wrapped && k == 0) continue;  // folded into the trailing run below
    Run r = runs[k];
    std::size_t len = r.len;
    std::size_t center_off = len / 2;
    if (wrapped && k == runs.size() - 1) {
      len += runs.front().len;
      center_off = len / 2;
    }
    std::size_t center = (r.begin + center_off) % rays.size();
    ranked.push_back({static_cast<double>(len) * kRayStepDeg, center});
  }
  std::stable_sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return std::fabs(rays[a.second].bearing) < std::fabs(rays[b.second].bearing);
  });
  for (std::size_t k = 0; k < ranked.size() && k < 3; ++k) {
    const Ray& center = rays[ranked[k].second];
    obs.entities.push_back(SceneEntity{EntityKind::OpenSpace, center.bearing, center.hit.dist, ""});
  }

  return obs;
}

// ---------------------------------------------------------------------------
// Simulator

/// Owns one blimp plus its environment clock. Humans follow their waypoint
/// loops; the blimp integrates under whatever action is currently held.
/// Single-threaded ownership: exactly one driver loop steps it.
class Simulator {
 public:
  explicit Simulator(Environment env, SimConfig cfg = {}) : env_(std::move(env)), cfg_(cfg) {
    env_.validate();
    state_.x_m = env_.spawn.x_m;
    state_.y_m = env_.spawn.y_m;
    state_.z_m = std::clamp(env_.spawn.z_m, kVerticalMarginM, env_.ceiling_m - kVerticalMarginM);
    state_.heading_deg = wrap_deg_360(env_.spawn.heading_deg);
  }

  const BlimpState& state() const { return state_; }
  const Environment& env() const { return env_; }
  const SimConfig& config() const { return cfg_; }
  double time_s() const { return time_s_; }
  std::uint64_t collision_count() const { return collisions_; }

  void set_active(Action a) { active_ = a; }
  Action active() const { return active_; }

  /// One dt step under the held action. Returns true when it collided.
  bool tick() { return advance(cfg_.dt_s); }

  /// Advances to the target sim time (fixed dt plus one partial step).
  /// Returns true when any step in the span collided.
  bool run_until(double t_target_s) {
    bool collided = false;
    while (time_s_ + cfg_.dt_s <= t_target_s + 1e-12) collided |= advance(cfg_.dt_s);
    double rest = t_target_s - time_s_;
    if (rest > 1e-9) collided |= advance(rest);
    return collided;
  }

  Observation observe(double fov_deg = 160.0, double max_range_m = 8.0) const {
    Observation o = sg::observe(state_, env_, fov_deg, max_range_m);
    o.timestamp_ms = static_cast<std::int64_t>(std::llround(time_s_ * 1000.0));
    return o;
  }

 private:
  bool advance(double dt) {
    for (auto& h : env_.humans) advance_human(h, dt);
    auto [next, collided] = sg::step(state_, env_, active_, dt, cfg_);
    state_ = next;
    time_s_ += dt;
    if (collided) ++collisions_;
    return collided;
  }

  static void advance_human(HumanAgent& h, double dt) {
    if (h.waypoints.empty()) return;
    double budget = h.speed_mps * dt;
    while (budget > 1e-12) {
      const auto& wp = h.waypoints[h.next_waypoint];
      double dx = wp[0] - h.x, dy = wp[1] - h.y;
      double d = std::hypot(dx, dy);
      if (d <= budget) {
        h.x = wp[0];
        h.y = wp[1];
        budget -= d;
        h.next_waypoint = (h.next_waypoint + 1) % h.waypoints.size();
        if (h.waypoints.size() == 1) return;
      } else {
        h.x += dx / d * budget;
        h.y += dy / d * budget;
        return;
      }
    }
  }

  Environment env_;
  SimConfig cfg_;
  BlimpState state_;
  Action active_ = Action::Stop;
  double time_s_ = 0.0;
  std::uint64_t collisions_ = 0;
};

}  // namespace sg

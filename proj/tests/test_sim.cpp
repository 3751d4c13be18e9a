#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sg/sim.hpp"

using namespace sg;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Environment open_room(double w = 40.0, double h = 40.0) {
  Environment env;
  env.name = "open";
  env.width_m = w;
  env.height_m = h;
  env.ceiling_m = 5.0;
  env.spawn = {w / 2.0, h / 2.0, 1.5, 0.0};
  return env;
}

// Independent reference: brute-force Euler at a tiny step for the 1-D law
// v' = a - k v, x' = v. No shared code with the integrator under test.
struct EulerRef {
  double v = 0.0, x = 0.0;
  void run(double a, double k, double duration, double dt = 1e-5) {
    long n = std::lround(duration / dt);
    for (long i = 0; i < n; ++i) {
      v += (a - k * v) * dt;
      x += v * dt;
    }
  }
};

}  // namespace

TEST_CASE("angle wrapping") {
  CHECK(wrap_deg_360(0.0) == 0.0);
  CHECK(wrap_deg_360(365.0) == 5.0);
  CHECK(wrap_deg_360(-10.0) == 350.0);
  CHECK(wrap_deg_180(190.0) == -170.0);
  CHECK(wrap_deg_180(-190.0) == 170.0);
  CHECK(wrap_deg_180(180.0) == 180.0);
  CHECK(wrap_deg_180(-180.0) == 180.0);
}

TEST_CASE("forward acceleration matches the fine-step reference") {
  Environment env = open_room();
  SimConfig cfg;
  for (double horizon : {1.0, 2.8, 10.0}) {
    EulerRef ref;
    ref.run(cfg.thrust_accel_mps2, cfg.drag_per_s, horizon);

    BlimpState s;
    s.x_m = env.spawn.x_m;
    s.y_m = env.spawn.y_m;
    long n = std::lround(horizon / cfg.dt_s);
    for (long i = 0; i < n; ++i) s = step(s, env, Action::Forward, cfg.dt_s, cfg).state;

    double displacement = s.y_m - env.spawn.y_m;
    CAPTURE(horizon);
    CHECK_THAT(s.v_forward_mps, WithinRel(ref.v, 5e-3));
    CHECK_THAT(displacement, WithinRel(ref.x, 5e-3));
  }
}

TEST_CASE("refining dt tenfold moves the 10 s trajectory by well under 2%") {
  Environment env = open_room();
  SimConfig cfg;

  auto fly = [&](double dt, Action a) {
    BlimpState s;
    s.x_m = env.spawn.x_m;
    s.y_m = env.spawn.y_m;
    long n = std::lround(10.0 / dt);
    for (long i = 0; i < n; ++i) s = step(s, env, a, dt, cfg).state;
    return s;
  };

  for (Action a : {Action::Forward, Action::TurnRight, Action::TurnLeft}) {
    BlimpState coarse = fly(0.1, a);
    BlimpState fine = fly(0.001, a);
    double dist_coarse = std::hypot(coarse.x_m - env.spawn.x_m, coarse.y_m - env.spawn.y_m);
    double dist_fine = std::hypot(fine.x_m - env.spawn.x_m, fine.y_m - env.spawn.y_m);
    double sep = std::hypot(coarse.x_m - fine.x_m, coarse.y_m - fine.y_m);
    CAPTURE(action_name(a), dist_coarse, dist_fine);
    CHECK(sep <= 0.02 * std::max(dist_fine, 1e-9));
    CHECK_THAT(coarse.v_forward_mps, WithinRel(fine.v_forward_mps, 1e-6));
  }
}

TEST_CASE("terminal speed is thrust over drag") {
  Environment env = open_room(200.0, 200.0);
  SimConfig cfg;
  BlimpState s;
  s.x_m = 100.0;
  s.y_m = 10.0;
  for (int i = 0; i < 2000; ++i) s = step(s, env, Action::Forward, cfg.dt_s, cfg).state;
  CHECK_THAT(s.v_forward_mps, WithinAbs(cfg.thrust_accel_mps2 / cfg.drag_per_s, 1e-9));
  CHECK_THAT(s.v_forward_mps, WithinAbs(0.5, 1e-9));
}

TEST_CASE("stop decays speed exponentially") {
  Environment env = open_room();
  SimConfig cfg;
  BlimpState s;
  s.x_m = 20.0;
  s.y_m = 20.0;
  s.v_forward_mps = 0.5;
  for (int i = 0; i < 20; ++i) s = step(s, env, Action::Stop, cfg.dt_s, cfg).state;
  CHECK_THAT(s.v_forward_mps, WithinAbs(0.5 * std::exp(-cfg.drag_per_s * 2.0), 1e-12));
}

TEST_CASE("turns arc rather than pivot") {
  Environment env = open_room(60.0, 60.0);
  SimConfig cfg;
  BlimpState s;
  s.x_m = 30.0;
  s.y_m = 30.0;

  // Reach cruise, then hold TurnRight for one full revolution (18 s).
  for (int i = 0; i < 300; ++i) s = step(s, env, Action::Forward, cfg.dt_s, cfg).state;
  BlimpState at_start_of_turn = s;
  for (int i = 0; i < 180; ++i) s = step(s, env, Action::TurnRight, cfg.dt_s, cfg).state;

  CHECK_THAT(s.heading_deg, WithinAbs(at_start_of_turn.heading_deg, 1e-6));
  // Circle of radius v/omega ~ 1.43 m: it must have left the start point,
  // traveled, and come back near it.
  double back = std::hypot(s.x_m - at_start_of_turn.x_m, s.y_m - at_start_of_turn.y_m);
  CHECK(back < 0.1);
  // Velocity stays essentially at terminal through the arc (thrust is on).
  CHECK_THAT(s.v_forward_mps, WithinAbs(0.5, 1e-5));

  // Half a revolution displaces by the turn diameter.
  BlimpState h = at_start_of_turn;
  for (int i = 0; i < 90; ++i) h = step(h, env, Action::TurnRight, cfg.dt_s, cfg).state;
  double diameter = std::hypot(h.x_m - at_start_of_turn.x_m, h.y_m - at_start_of_turn.y_m);
  double expected_radius = 0.5 / (cfg.turn_rate_dps * kDegToRad);
  CHECK_THAT(diameter, WithinRel(2.0 * expected_radius, 0.01));
}

TEST_CASE("vertical motion is kinematic and clamped") {
  Environment env = open_room();
  SimConfig cfg;
  BlimpState s;
  s.x_m = 20.0;
  s.y_m = 20.0;
  s.z_m = 1.0;

  auto r = step(s, env, Action::Up, cfg.dt_s, cfg);
  CHECK_THAT(r.state.z_m, WithinAbs(1.02, 1e-12));
  CHECK(r.state.v_vertical_mps == cfg.vertical_rate_mps);
  CHECK_FALSE(r.collided);

  // Ride the ceiling: clamped, not a collision.
  for (int i = 0; i < 400; ++i) {
    r = step(r.state, env, Action::Up, cfg.dt_s, cfg);
    REQUIRE_FALSE(r.collided);
  }
  CHECK_THAT(r.state.z_m, WithinAbs(env.ceiling_m - kVerticalMarginM, 1e-12));

  for (int i = 0; i < 800; ++i) {
    r = step(r.state, env, Action::Down, cfg.dt_s, cfg);
    REQUIRE_FALSE(r.collided);
  }
  CHECK_THAT(r.state.z_m, WithinAbs(kVerticalMarginM, 1e-12));

  // Up/Down add no planar speed.
  CHECK(r.state.v_forward_mps == 0.0);
}

TEST_CASE("wall collision projects inside and kills forward speed") {
  Environment env = open_room(10.0, 10.0);
  BlimpState s;
  s.x_m = 10.05;  // past the east wall
  s.y_m = 5.0;
  s.v_forward_mps = 0.4;
  auto [fixed, collided] = check_collision(s, env);
  CHECK(collided);
  CHECK_THAT(fixed.x_m, WithinAbs(10.0 - kWallEpsM, 1e-12));
  CHECK(fixed.v_forward_mps == 0.0);

  BlimpState inside;
  inside.x_m = 5.0;
  inside.y_m = 5.0;
  inside.v_forward_mps = 0.4;
  auto [same, hit] = check_collision(inside, env);
  CHECK_FALSE(hit);
  CHECK(same.v_forward_mps == 0.4);
}

TEST_CASE("circle collision projects radially; the boundary itself is free") {
  Environment env = open_room(10.0, 10.0);
  ObstacleShape pillar;
  pillar.kind = ObstacleShape::Kind::Circle;
  pillar.label = "pillar";
  pillar.cx = 5.0;
  pillar.cy = 5.0;
  pillar.radius = 1.0;
  env.obstacles.push_back(pillar);
  env.spawn = {2.0, 2.0, 1.5, 0.0};

  BlimpState s;
  s.x_m = 5.6;
  s.y_m = 5.0;
  s.v_forward_mps = 0.3;
  auto [fixed, collided] = check_collision(s, env);
  CHECK(collided);
  CHECK_THAT(fixed.x_m, WithinAbs(6.0, 1e-12));
  CHECK_THAT(fixed.y_m, WithinAbs(5.0, 1e-12));
  CHECK(fixed.v_forward_mps == 0.0);

  BlimpState on_boundary;
  on_boundary.x_m = 6.0;
  on_boundary.y_m = 5.0;
  on_boundary.v_forward_mps = 0.3;
  auto [untouched, hit] = check_collision(on_boundary, env);
  CHECK_FALSE(hit);
  CHECK(untouched.v_forward_mps == 0.3);
}

TEST_CASE("box collision pops out through the nearest face") {
  Environment env = open_room(20.0, 20.0);
  ObstacleShape crate;
  crate.kind = ObstacleShape::Kind::Box;
  crate.cx = 10.0;
  crate.cy = 10.0;
  crate.half_x = 2.0;
  crate.half_y = 1.0;
  env.obstacles.push_back(crate);
  env.spawn = {2.0, 2.0, 1.5, 0.0};

  BlimpState s;
  s.x_m = 10.0;
  s.y_m = 10.8;  // 0.2 from the north face, 2+ from east/west
  auto [fixed, collided] = check_collision(s, env);
  CHECK(collided);
  CHECK_THAT(fixed.y_m, WithinAbs(11.0, 1e-12));
  CHECK_THAT(fixed.x_m, WithinAbs(10.0, 1e-12));
}

TEST_CASE("random action sequences stay contained and speed-bounded") {
  Environment env = open_room(12.0, 9.0);
  env.ceiling_m = 3.0;
  SimConfig cfg;
  Simulator sim(env, cfg);
  Rng rng(2024);
  double vmax = cfg.thrust_accel_mps2 / cfg.drag_per_s;

  for (int i = 0; i < 5000; ++i) {
    if (i % 7 == 0)
      sim.set_active(kAllActions[rng.next_u64() % kAllActions.size()]);
    sim.tick();
    const BlimpState& s = sim.state();
    REQUIRE(s.x_m >= 0.0);
    REQUIRE(s.x_m <= env.width_m);
    REQUIRE(s.y_m >= 0.0);
    REQUIRE(s.y_m <= env.height_m);
    REQUIRE(s.z_m >= kVerticalMarginM - 1e-12);
    REQUIRE(s.z_m <= env.ceiling_m - kVerticalMarginM + 1e-12);
    REQUIRE(std::fabs(s.v_forward_mps) <= vmax + 1e-9);
  }
}

TEST_CASE("observe sees walls, entities and open space with correct geometry") {
  Environment env = open_room(10.0, 10.0);
  env.spawn = {5.0, 5.0, 1.5, 0.0};
  ObstacleShape pillar;
  pillar.kind = ObstacleShape::Kind::Circle;
  pillar.label = "pillar";
  pillar.cx = 5.0;
  pillar.cy = 7.0;
  pillar.radius = 0.5;
  pillar.is_landmark = true;
  env.obstacles.push_back(pillar);
  env.humans.push_back({"visitor", 5.0, 8.2, {}, 0.8, 0});
  env.landmarks.push_back({"doorway", 4.0, 6.0});  // bearing -45, inside the fov

  Simulator sim(env);
  Observation obs = sim.observe(160.0, 8.0);

  const SceneEntity* human = nullptr;
  const SceneEntity* obstacle = nullptr;
  const SceneEntity* landmark_twin = nullptr;
  const SceneEntity* doorway = nullptr;
  int walls = 0, open = 0;
  for (const auto& e : obs.entities) {
    switch (e.kind) {
      case EntityKind::Human: human = &e; break;
      case EntityKind::Obstacle: obstacle = &e; break;
      case EntityKind::Landmark:
        if (e.label == "pillar") landmark_twin = &e;
        if (e.label == "doorway") doorway = &e;
        break;
      case EntityKind::Wall: ++walls; break;
      case EntityKind::OpenSpace: ++open; break;
      default: break;
    }
  }

  REQUIRE(human != nullptr);
  CHECK_THAT(human->bearing_deg, WithinAbs(0.0, 1e-9));
  CHECK_THAT(human->range_m, WithinAbs(3.2, 1e-9));
  CHECK(human->label == "visitor");

  REQUIRE(obstacle != nullptr);
  CHECK_THAT(obstacle->range_m, WithinAbs(1.5, 1e-9));
  CHECK_THAT(obstacle->bearing_deg, WithinAbs(0.0, 1e-9));
  REQUIRE(landmark_twin != nullptr);
  CHECK_THAT(landmark_twin->range_m, WithinAbs(1.5, 1e-9));

  REQUIRE(doorway != nullptr);
  CHECK_THAT(doorway->bearing_deg, WithinAbs(-45.0, 1e-9));
  CHECK_THAT(doorway->range_m, WithinAbs(std::sqrt(2.0), 1e-9));

  // Heading north from the center: west, north and east walls visible.
  CHECK(walls == 3);
  CHECK(open >= 1);
  CHECK(open <= 3);
}

TEST_CASE("observe respects fov and range limits") {
  Environment env = open_room(10.0, 10.0);
  env.spawn = {5.0, 5.0, 1.5, 0.0};
  env.humans.push_back({"east", 9.0, 5.0, {}, 0.8, 0});  // bearing +90
  Simulator sim(env);

  Observation narrow = sim.observe(160.0, 8.0);
  CHECK_FALSE(narrow.has_human());

  Observation pano = sim.observe(360.0, 8.0);
  REQUIRE(pano.has_human());
  CHECK_THAT(pano.nearest_human()->bearing_deg, WithinAbs(90.0, 1e-9));
  CHECK(pano.fov_deg == 360.0);

  Observation myopic = sim.observe(360.0, 2.0);
  CHECK_FALSE(myopic.has_human());
}

TEST_CASE("a blimp boxed into a corner reports no open space") {
  Environment env = open_room(4.0, 4.0);
  env.spawn = {2.0, 2.0, 1.0, 0.0};
  env.ceiling_m = 3.0;
  Simulator sim(env);
  Observation obs = sim.observe(360.0, 8.0);
  for (const auto& e : obs.entities) CHECK(e.kind != EntityKind::OpenSpace);
}

TEST_CASE("open space wraps across the panorama seam") {
  // Heading north, a wall of boxes ahead: the open corridor lies behind,
  // spanning the -180/+180 seam.
  Environment env = open_room(8.0, 40.0);
  env.spawn = {4.0, 35.0, 1.5, 0.0};
  ObstacleShape bar;
  bar.kind = ObstacleShape::Kind::Box;
  bar.label = "bar";
  bar.cx = 4.0;
  bar.cy = 37.0;
  bar.half_x = 3.9;
  bar.half_y = 0.5;
  env.obstacles.push_back(bar);
  Simulator sim(env);
  Observation obs = sim.observe(360.0, 8.0);
  const SceneEntity* widest = nullptr;
  for (const auto& e : obs.entities)
    if (e.kind == EntityKind::OpenSpace && !widest) widest = &e;  // first = widest
  REQUIRE(widest != nullptr);
  // The corridor behind covers the seam; its center must be near +/-180.
  CHECK(std::fabs(std::fabs(widest->bearing_deg) - 180.0) < 30.0);
}

TEST_CASE("humans walk their waypoint loops") {
  Environment env = open_room(10.0, 10.0);
  env.humans.push_back({"walker", 1.0, 1.0, {{1.0, 1.0}, {4.0, 1.0}}, 1.0, 1});
  Simulator sim(env);

  sim.run_until(1.0);  // speed 1 m/s -> at (2,1)
  CHECK_THAT(sim.env().humans[0].x, WithinAbs(2.0, 1e-9));
  sim.run_until(3.0);  // reaches (4,1) exactly, then loops back
  CHECK_THAT(sim.env().humans[0].x, WithinAbs(4.0, 1e-9));
  sim.run_until(5.0);
  CHECK_THAT(sim.env().humans[0].x, WithinAbs(2.0, 1e-9));
}

TEST_CASE("run_until lands exactly on the target time") {
  Environment env = open_room();
  Simulator sim(env);
  sim.run_until(0.25);
  CHECK_THAT(sim.time_s(), WithinAbs(0.25, 1e-12));
  sim.run_until(2.873);
  CHECK_THAT(sim.time_s(), WithinAbs(2.873, 1e-12));
}

TEST_CASE("environment validation rejects bad setups") {
  Environment env = open_room(10.0, 10.0);
  env.spawn = {11.0, 5.0, 1.5, 0.0};
  CHECK_THROWS_AS(Simulator(env), Error);

  env = open_room(10.0, 10.0);
  ObstacleShape big;
  big.kind = ObstacleShape::Kind::Circle;
  big.cx = 5.0;
  big.cy = 5.0;
  big.radius = 2.0;
  env.obstacles.push_back(big);  // swallows the spawn point
  CHECK_THROWS_AS(Simulator(env), Error);

  env = open_room(10.0, 10.0);
  ObstacleShape oob;
  oob.kind = ObstacleShape::Kind::Box;
  oob.cx = 9.5;
  oob.cy = 5.0;
  oob.half_x = 1.0;
  oob.half_y = 1.0;
  env.obstacles.push_back(oob);  // pokes through the east wall
  CHECK_THROWS_AS(Simulator(env), Error);
}

#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "sg/policy.hpp"

using namespace sg;

namespace {

Observation obs_with(std::initializer_list<SceneEntity> entities) {
  Observation o;
  o.entities = entities;
  return o;
}

}  // namespace

TEST_CASE("rule 1: near obstacle in the cone forces an avoidance turn") {
  ScriptedPolicyParams p;
  p.approach_human_prob = 1.0;  // rule 1 must still win over the human
  Rng rng(1);

  auto o = obs_with({{EntityKind::Obstacle, 5.0, 0.5, "pillar"},
                     {EntityKind::Human, 0.0, 2.0, ""}});
  auto out = scripted_policy_outcome(p, o, rng);
  CHECK(out.rule == PolicyRule::ObstacleAvoid);
  CHECK(out.decision.action == Action::TurnLeft);  // threat to the right

  auto left = obs_with({{EntityKind::Wall, -10.0, 0.8, "west wall"}});
  out = scripted_policy_outcome(p, left, rng);
  CHECK(out.rule == PolicyRule::ObstacleAvoid);
  CHECK(out.decision.action == Action::TurnRight);
}

TEST_CASE("rule 1 ignores far or out-of-cone hazards") {
  ScriptedPolicyParams p;
  p.stop_prob = 1.0;  // make the fall-through visible
  Rng rng(1);

  auto far = obs_with({{EntityKind::Obstacle, 0.0, 1.5, ""}});
  CHECK(scripted_policy_outcome(p, far, rng).rule == PolicyRule::Contemplate);

  auto side = obs_with({{EntityKind::Wall, 45.0, 0.5, ""}});
  CHECK(scripted_policy_outcome(p, side, rng).rule == PolicyRule::Contemplate);

  // Humans and landmarks are not proximity threats.
  auto human = obs_with({{EntityKind::Human, 0.0, 0.5, ""}});
  auto out = scripted_policy_outcome(p, human, rng);
  CHECK((out.rule == PolicyRule::HumanApproach || out.rule == PolicyRule::HumanAvoid));
}

TEST_CASE("rule 2: certain approacher steers toward the human") {
  ScriptedPolicyParams p;
  p.approach_human_prob = 1.0;
  Rng rng(2);

  auto ahead = obs_with({{EntityKind::Human, 10.0, 3.0, ""}});
  auto out = scripted_policy_outcome(p, ahead, rng);
  CHECK(out.rule == PolicyRule::HumanApproach);
  CHECK(out.decision.action == Action::Forward);

  auto right = obs_with({{EntityKind::Human, 60.0, 3.0, ""}});
  CHECK(scripted_policy_outcome(p, right, rng).decision.action == Action::TurnRight);

  auto left = obs_with({{EntityKind::Human, -35.0, 3.0, ""}});
  CHECK(scripted_policy_outcome(p, left, rng).decision.action == Action::TurnLeft);
}

TEST_CASE("rule 2: certain avoider goes up or turns away") {
  ScriptedPolicyParams p;
  p.approach_human_prob = 0.0;
  Rng rng(3);

  p.vertical_avoid_prob = 1.0;
  auto o = obs_with({{EntityKind::Human, 10.0, 3.0, ""}});
  auto out = scripted_policy_outcome(p, o, rng);
  CHECK(out.rule == PolicyRule::HumanAvoid);
  CHECK(out.decision.action == Action::Up);

  p.vertical_avoid_prob = 0.0;
  CHECK(scripted_policy_outcome(p, o, rng).decision.action == Action::TurnLeft);
  auto left = obs_with({{EntityKind::Human, -25.0, 3.0, ""}});
  CHECK(scripted_policy_outcome(p, left, rng).decision.action == Action::TurnRight);
}

TEST_CASE("rule 2 targets the nearest human") {
  ScriptedPolicyParams p;
  p.approach_human_prob = 1.0;
  Rng rng(4);
  auto o = obs_with({{EntityKind::Human, 70.0, 6.0, "far"},
                     {EntityKind::Human, -50.0, 2.0, "near"}});
  CHECK(scripted_policy_outcome(p, o, rng).decision.action == Action::TurnLeft);
}

TEST_CASE("rule 3: contemplative stop") {
  ScriptedPolicyParams p;
  p.stop_prob = 1.0;
  Rng rng(5);
  auto o = obs_with({{EntityKind::OpenSpace, 0.0, 6.0, ""}});
  auto out = scripted_policy_outcome(p, o, rng);
  CHECK(out.rule == PolicyRule::Contemplate);
  CHECK(out.decision.action == Action::Stop);
  CHECK_FALSE(out.decision.reason.empty());
}

TEST_CASE("rule 4: explores the only open sector") {
  ScriptedPolicyParams p;
  p.stop_prob = 0.0;
  Rng rng(6);

  auto left = obs_with({{EntityKind::OpenSpace, -40.0, 6.0, ""}});
  auto out = scripted_policy_outcome(p, left, rng);
  CHECK(out.rule == PolicyRule::Explore);
  CHECK(out.decision.action == Action::TurnLeft);

  auto ahead = obs_with({{EntityKind::OpenSpace, 5.0, 6.0, ""}});
  CHECK(scripted_policy_outcome(p, ahead, rng).decision.action == Action::Forward);

  // Boxed in (no open sector): rotate toward the deepest visible entity.
  auto none = obs_with({{EntityKind::Wall, 0.0, 4.0, ""}, {EntityKind::Wall, -80.0, 6.0, ""}});
  CHECK(scripted_policy_outcome(p, none, rng).decision.action == Action::TurnLeft);

  auto bare = obs_with({});
  CHECK(scripted_policy_outcome(p, bare, rng).decision.action == Action::Forward);
}

TEST_CASE("rule 4: explore bias weights wider-open sectors") {
  ScriptedPolicyParams p;
  p.stop_prob = 0.0;
  p.explore_bias = 6.0;  // strongly prefer the longer free ray
  Rng rng(7);
  auto o = obs_with({{EntityKind::OpenSpace, -60.0, 3.2, ""},
                     {EntityKind::OpenSpace, 55.0, 7.9, ""}});
  int right = 0;
  for (int i = 0; i < 300; ++i)
    if (scripted_policy_outcome(p, o, rng).decision.action == Action::TurnRight) ++right;
  CHECK(right > 280);  // (7.9/3.2)^6 ~ 225:1 odds
}

TEST_CASE("same seed and observations give identical decision streams") {
  ScriptedPolicyParams p;
  p.approach_human_prob = 0.4;
  p.stop_prob = 0.2;
  auto o1 = obs_with({{EntityKind::Human, 25.0, 4.0, ""}, {EntityKind::OpenSpace, -10.0, 5.0, ""}});
  auto o2 = obs_with({{EntityKind::OpenSpace, 30.0, 4.0, ""}});

  Rng a(42), b(42);
  for (int i = 0; i < 500; ++i) {
    const Observation& o = (i % 2 == 0) ? o1 : o2;
    Decision da = scripted_policy(p, o, a);
    Decision db = scripted_policy(p, o, b);
    REQUIRE(da.action == db.action);
    REQUIRE(da.reason == db.reason);
  }
}

TEST_CASE("approach probability is honored empirically") {
  ScriptedPolicyParams p;
  p.approach_human_prob = 0.857;
  Rng rng(11);
  auto o = obs_with({{EntityKind::Human, 5.0, 3.0, ""}});
  int approach = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    auto out = scripted_policy_outcome(p, o, rng);
    if (out.rule == PolicyRule::HumanApproach) ++approach;
  }
  double rate = static_cast<double>(approach) / n;
  CHECK_THAT(rate, Catch::Matchers::WithinAbs(0.857, 0.01));
}

TEST_CASE("every voice supplies a phrase for every branch") {
  for (const char* voice : {"cloud", "companion", "observer", "explorer", "unknown"}) {
    for (PolicyRule rule : {PolicyRule::ObstacleAvoid, PolicyRule::HumanApproach,
                            PolicyRule::HumanAvoid, PolicyRule::Contemplate, PolicyRule::Explore}) {
      for (Action a : kAllActions) {
        std::string phrase = phrase_for(voice, rule, a);
        CAPTURE(voice, policy_rule_name(rule), action_name(a));
        CHECK_FALSE(phrase.empty());
      }
    }
  }
}

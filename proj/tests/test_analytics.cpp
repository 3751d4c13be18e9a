#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "sg/analytics.hpp"

using namespace sg;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Observation obs_with_human(double bearing_deg, double range_m = 3.0) {
  Observation o;
  o.entities.push_back({EntityKind::Human, bearing_deg, range_m, "visitor"});
  o.entities.push_back({EntityKind::Wall, 70.0, 4.0, ""});
  return o;
}

Observation obs_without_human() {
  Observation o;
  o.entities.push_back({EntityKind::Wall, 0.0, 4.0, ""});
  o.entities.push_back({EntityKind::OpenSpace, -20.0, 8.0, ""});
  return o;
}

FlightRecord rec(Action a, const std::string& persona = "p", std::int64_t t_ms = 0,
                 const std::string& reason = "") {
  FlightRecord r;
  r.t_ms = t_ms;
  r.persona_id = persona;
  r.action = a;
  r.reason = reason;
  r.latency_ms = 2800;
  r.human_visible = false;
  r.collision = false;
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Geometric stance classification

TEST_CASE("no visible human is not applicable") {
  CHECK(classify_stance(rec(Action::Forward), obs_without_human()) == StanceClass::NotApplicable);
  CHECK(classify_stance(rec(Action::Stop), Observation{}) == StanceClass::NotApplicable);
}

TEST_CASE("forward approaches inside the 45 degree cone") {
  CHECK(classify_stance(rec(Action::Forward), obs_with_human(0.0)) == StanceClass::Approach);
  CHECK(classify_stance(rec(Action::Forward), obs_with_human(45.0)) == StanceClass::Approach);
  CHECK(classify_stance(rec(Action::Forward), obs_with_human(-45.0)) == StanceClass::Approach);
  CHECK(classify_stance(rec(Action::Forward), obs_with_human(45.01)) == StanceClass::Avoid);
  CHECK(classify_stance(rec(Action::Forward), obs_with_human(-90.0)) == StanceClass::Avoid);
  CHECK(kStanceConeDeg == 45.0);
}

TEST_CASE("turns approach only when they shrink the bearing") {
  CHECK(classify_stance(rec(Action::TurnRight), obs_with_human(30.0)) == StanceClass::Approach);
  CHECK(classify_stance(rec(Action::TurnRight), obs_with_human(-30.0)) == StanceClass::Avoid);
  CHECK(classify_stance(rec(Action::TurnLeft), obs_with_human(-30.0)) == StanceClass::Approach);
  CHECK(classify_stance(rec(Action::TurnLeft), obs_with_human(30.0)) == StanceClass::Avoid);
  // dead ahead, a turn in either direction moves away
  CHECK(classify_stance(rec(Action::TurnRight), obs_with_human(0.0)) == StanceClass::Avoid);
  CHECK(classify_stance(rec(Action::TurnLeft), obs_with_human(0.0)) == StanceClass::Avoid);
}

TEST_CASE("vertical and halting actions avoid while a human is visible") {
  CHECK(classify_stance(rec(Action::Up), obs_with_human(10.0)) == StanceClass::Avoid);
  CHECK(classify_stance(rec(Action::Down), obs_with_human(0.0)) == StanceClass::Avoid);
  CHECK(classify_stance(rec(Action::Reverse), obs_with_human(0.0)) == StanceClass::Avoid);
  CHECK(classify_stance(rec(Action::Stop), obs_with_human(0.0)) == StanceClass::Avoid);
}

TEST_CASE("stance follows the nearest of several humans") {
  Observation o;
  o.entities.push_back({EntityKind::Human, 60.0, 5.0, "far"});
  o.entities.push_back({EntityKind::Human, -10.0, 1.5, "near"});
  // forward: near human at -10 deg is inside the cone even though the far one is not
  CHECK(classify_stance(rec(Action::Forward), o) == StanceClass::Approach);
  CHECK(classify_stance(rec(Action::TurnLeft), o) == StanceClass::Approach);
  CHECK(classify_stance(rec(Action::TurnRight), o) == StanceClass::Avoid);
}

// ---------------------------------------------------------------------------
// Keyword fallback

TEST_CASE("reasons without a human mention are not applicable") {
  CHECK(stance_from_reason("Floating towards the inviting open floor") ==
        StanceClass::NotApplicable);
  CHECK(stance_from_reason("") == StanceClass::NotApplicable);
  CHECK(stance_from_reason("To pause and gather my cloudy thoughts") ==
        StanceClass::NotApplicable);
}

TEST_CASE("avoidance wording wins over approach wording") {
  CHECK(stance_from_reason("To gracefully avoid the friendly human") == StanceClass::Avoid);
  CHECK(stance_from_reason("To gracefully ascend and avoid the person below") ==
        StanceClass::Avoid);
  CHECK(stance_from_reason("Drifting toward the person, then away") == StanceClass::Avoid);
  CHECK(stance_from_reason("Gliding towards the person to greet them") == StanceClass::Approach);
  CHECK(stance_from_reason("APPROACHING THE HUMAN") == StanceClass::Approach);
  // human mentioned but no directional keyword: conservative avoid
  CHECK(stance_from_reason("A person stands there") == StanceClass::Avoid);
}

// ---------------------------------------------------------------------------
// analyze_flights

TEST_CASE("fingerprint counts match a hand tally") {
  AnalysisInput a;
  for (Action act : {Action::Forward, Action::Forward, Action::Forward, Action::TurnLeft,
                     Action::Stop})
    a.records.push_back(rec(act, "alpha", static_cast<std::int64_t>(a.records.size())));
  AnalysisInput b;
  for (Action act : {Action::Forward, Action::TurnLeft, Action::TurnLeft, Action::TurnRight,
                     Action::Stop, Action::Stop})
    b.records.push_back(rec(act, "beta", static_cast<std::int64_t>(b.records.size())));

  auto report = analyze_flights({a, b}, CategoryScheme::advance_maneuver_halt());
  CHECK(report.scheme_name == "advance-maneuver-halt");
  REQUIRE(report.personas.size() == 2);
  CHECK(report.personas[0].persona_id == "alpha");  // first-appearance order
  CHECK(report.personas[0].decisions == 5);
  CHECK(report.personas[0].category_counts == std::vector<std::int64_t>{3, 1, 1});
  CHECK(report.personas[1].decisions == 6);
  CHECK(report.personas[1].category_counts == std::vector<std::int64_t>{1, 3, 2});

  REQUIRE(report.fingerprint_chi.has_value());
  CHECK(report.fingerprint_chi->df == 2);
  CHECK(report.fingerprint_chi->n == 11);
  CHECK_THAT(report.fingerprint_chi->statistic, WithinRel(2.2611111111111115, 1e-12));
  CHECK_THAT(report.fingerprint_chi->p_value, WithinRel(0.3228538433435991, 1e-10));
  CHECK(report.fingerprint_chi->low_expected);  // all expected counts are tiny here

  CHECK(report.fingerprint.row_labels == std::vector<std::string>{"alpha", "beta"});
  CHECK(report.fingerprint.col_labels ==
        std::vector<std::string>{"Advance", "Maneuver", "Halt"});
}

TEST_CASE("per-action scheme splits every letter") {
  AnalysisInput a;
  for (Action act : kAllActions) a.records.push_back(rec(act, "alpha"));
  AnalysisInput b;
  for (Action act : kAllActions) b.records.push_back(rec(act, "beta"));
  auto report = analyze_flights({a, b}, CategoryScheme::per_action());
  REQUIRE(report.personas.size() == 2);
  CHECK(report.personas[0].category_counts == std::vector<std::int64_t>{1, 1, 1, 1, 1, 1, 1});
  REQUIRE(report.fingerprint_chi.has_value());
  CHECK(report.fingerprint_chi->df == 6);
  CHECK(report.fingerprint_chi->statistic == 0.0);  // identical rows are independent
  CHECK(report.fingerprint_chi->p_value == 1.0);
}

TEST_CASE("single persona cannot produce a fingerprint test") {
  AnalysisInput a;
  a.records.push_back(rec(Action::Forward, "solo"));
  a.records.push_back(rec(Action::Stop, "solo", 1));
  auto report = analyze_flights({a}, CategoryScheme::advance_maneuver_halt());
  CHECK_FALSE(report.fingerprint_chi.has_value());
  CHECK_THAT(report.fingerprint_note, ContainsSubstring("2 rows"));
}

TEST_CASE("stance table comes from observations when present") {
  // alpha: 8 approach, 2 avoid; beta: 1 approach, 9 avoid
  AnalysisInput a;
  for (int i = 0; i < 8; ++i) {
    a.records.push_back(rec(Action::Forward, "alpha", i));
    a.observations.push_back(obs_with_human(0.0));
  }
  for (int i = 0; i < 2; ++i) {
    a.records.push_back(rec(Action::Up, "alpha", 8 + i));
    a.observations.push_back(obs_with_human(0.0));
  }
  AnalysisInput b;
  b.records.push_back(rec(Action::Forward, "beta", 0));
  b.observations.push_back(obs_with_human(0.0));
  for (int i = 0; i < 9; ++i) {
    b.records.push_back(rec(Action::Stop, "beta", 1 + i));
    b.observations.push_back(obs_with_human(0.0));
  }
  // plus one record with no human in sight: counts as not_applicable
  b.records.push_back(rec(Action::Forward, "beta", 10));
  b.observations.push_back(obs_without_human());

  auto report = analyze_flights({a, b}, CategoryScheme::advance_maneuver_halt());
  CHECK(report.stance_source == "observations");
  CHECK(report.personas[0].approach == 8);
  CHECK(report.personas[0].avoid == 2);
  CHECK(report.personas[0].not_applicable == 0);
  CHECK_THAT(report.personas[0].approach_rate(), WithinAbs(0.8, 1e-12));
  CHECK(report.personas[1].approach == 1);
  CHECK(report.personas[1].avoid == 9);
  CHECK(report.personas[1].not_applicable == 1);

  REQUIRE(report.stance.has_value());
  REQUIRE(report.stance_chi.has_value());
  CHECK(report.stance_chi->df == 1);
  CHECK(report.stance_chi->n == 20);
  CHECK_THAT(report.stance_chi->statistic, WithinRel(9.8989898989899, 1e-12));
  CHECK_THAT(report.stance_chi->p_value, WithinRel(0.0016536951637003395, 1e-9));
}

TEST_CASE("logs without sidecars fall back to reason keywords") {
  AnalysisInput a;
  a.records.push_back(rec(Action::TurnRight, "alpha", 0, "To gracefully avoid the friendly human"));
  a.records.push_back(rec(Action::Forward, "alpha", 1, "Gliding towards the person to greet them"));
  a.records.push_back(rec(Action::Forward, "alpha", 2, "Towards the big window."));
  AnalysisInput b;
  b.records.push_back(rec(Action::Up, "beta", 0, "To gracefully ascend and avoid the person below"));
  b.records.push_back(rec(Action::Stop, "beta", 1, "To pause and gather my cloudy thoughts"));

  auto report = analyze_flights({a, b}, CategoryScheme::advance_maneuver_halt());
  CHECK(report.stance_source == "reasons");
  CHECK(report.personas[0].approach == 1);
  CHECK(report.personas[0].avoid == 1);
  CHECK(report.personas[0].not_applicable == 1);
  CHECK(report.personas[1].avoid == 1);
  CHECK(report.personas[1].not_applicable == 1);

  // one input with a sidecar and one without makes the source mixed
  AnalysisInput with_obs;
  with_obs.records.push_back(rec(Action::Forward, "gamma", 0));
  with_obs.observations.push_back(obs_with_human(0.0));
  auto mixed = analyze_flights({a, with_obs}, CategoryScheme::advance_maneuver_halt());
  CHECK(mixed.stance_source == "mixed");
}

TEST_CASE("stance table skips personas with no human-applicable decisions") {
  AnalysisInput a;
  a.records.push_back(rec(Action::Forward, "alpha", 0));
  a.observations.push_back(obs_with_human(0.0));
  a.records.push_back(rec(Action::Up, "alpha", 1));
  a.observations.push_back(obs_with_human(0.0));
  AnalysisInput b;
  b.records.push_back(rec(Action::Forward, "beta", 0));
  b.observations.push_back(obs_without_human());

  auto report = analyze_flights({a, b}, CategoryScheme::advance_maneuver_halt());
  REQUIRE(report.stance.has_value());
  CHECK(report.stance->row_labels == std::vector<std::string>{"alpha"});
  // a single remaining row cannot be tested for independence
  CHECK_FALSE(report.stance_chi.has_value());
  CHECK_FALSE(report.stance_note.empty());

  AnalysisInput only_na;
  only_na.records.push_back(rec(Action::Forward, "quiet", 0));
  only_na.observations.push_back(obs_without_human());
  auto empty = analyze_flights({only_na}, CategoryScheme::advance_maneuver_halt());
  CHECK_FALSE(empty.stance.has_value());
  CHECK_THAT(empty.stance_note, ContainsSubstring("no human-applicable decisions"));
}

TEST_CASE("latency statistics are per persona with hand-checked values") {
  AnalysisInput a;
  for (int i = 0; i < 3; ++i) a.records.push_back(rec(Action::Forward, "alpha", i));
  a.records[0].latency_ms = 2000;
  a.records[1].latency_ms = 3000;
  a.records[2].latency_ms = 4000;
  AnalysisInput b;
  b.records.push_back(rec(Action::Stop, "beta", 0));  // a single sample has no sd

  auto report = analyze_flights({a, b}, CategoryScheme::advance_maneuver_halt());
  REQUIRE(report.personas[0].latency.has_value());
  CHECK_THAT(report.personas[0].latency->mean_s, WithinAbs(3.0, 1e-12));
  CHECK_THAT(report.personas[0].latency->sd_s, WithinAbs(1.0, 1e-12));
  CHECK(report.personas[0].latency->n == 3);
  CHECK_FALSE(report.personas[1].latency.has_value());
}

TEST_CASE("misaligned sidecar is a schema violation") {
  AnalysisInput a;
  a.records.push_back(rec(Action::Forward, "alpha", 0));
  a.records.push_back(rec(Action::Stop, "alpha", 1));
  a.observations.push_back(obs_with_human(0.0));  // 1 observation for 2 records
  try {
    analyze_flights({a}, CategoryScheme::advance_maneuver_halt());
    FAIL("expected SchemaViolation");
  } catch (const Error& e) {
    CHECK(e.code() == Err::Schema);
    CHECK_THAT(e.what(), ContainsSubstring("does not align"));
  }
}

TEST_CASE("interleaved logs group by persona across inputs") {
  AnalysisInput mixed;
  mixed.records.push_back(rec(Action::Forward, "alpha", 0));
  mixed.records.push_back(rec(Action::Forward, "beta", 1));
  mixed.records.push_back(rec(Action::Stop, "alpha", 2));
  AnalysisInput more;
  more.records.push_back(rec(Action::TurnLeft, "beta", 0));

  auto report = analyze_flights({mixed, more}, CategoryScheme::advance_maneuver_halt());
  REQUIRE(report.personas.size() == 2);
  CHECK(report.personas[0].persona_id == "alpha");
  CHECK(report.personas[0].decisions == 2);
  CHECK(report.personas[1].persona_id == "beta");
  CHECK(report.personas[1].decisions == 2);
  CHECK(report.personas[1].category_counts == std::vector<std::int64_t>{1, 1, 0});
}

TEST_CASE("report json carries the tables and chi results") {
  AnalysisInput a;
  for (int i = 0; i < 4; ++i) {
    a.records.push_back(rec(i % 2 ? Action::Forward : Action::Stop, "alpha", i));
    a.observations.push_back(obs_with_human(0.0));
  }
  AnalysisInput b;
  for (int i = 0; i < 4; ++i) {
    b.records.push_back(rec(i % 2 ? Action::TurnLeft : Action::Up, "beta", i));
    b.observations.push_back(obs_with_human(20.0));
  }
  auto report = analyze_flights({a, b}, CategoryScheme::advance_maneuver_halt());
  auto j = report_to_json(report);
  CHECK(j.at("kind").get<std::string>() == "sg-analysis-report");
  CHECK(j.at("version").get<int>() == 1);
  CHECK(j.at("scheme").get<std::string>() == "advance-maneuver-halt");
  CHECK(j.at("stance_source").get<std::string>() == "observations");
  REQUIRE(j.at("personas").size() == 2);
  CHECK(j.at("personas").at(0).at("persona_id").get<std::string>() == "alpha");
  CHECK(j.at("personas").at(0).at("decisions").get<int>() == 4);
  CHECK(j.at("fingerprint").at("counts").size() == 2);
  CHECK_FALSE(j.at("fingerprint").at("chi_square").is_null());
  CHECK(j.at("fingerprint").at("chi_square").at("df").get<int>() == 2);
  REQUIRE_FALSE(j.at("stance").is_null());
  CHECK(j.at("stance").at("rows").size() == 2);

  // single-persona report renders a null chi_square with a note
  auto solo = analyze_flights({a}, CategoryScheme::advance_maneuver_halt());
  auto js = report_to_json(solo);
  CHECK(js.at("fingerprint").at("chi_square").is_null());
  CHECK_FALSE(js.at("fingerprint").at("note").get<std::string>().empty());
}

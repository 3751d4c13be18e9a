#pragma once

// Post-flight analytics: behavioural fingerprints (action-category
// distributions compared across personas) and human-interaction stance
// classification, both feeding the chi-square machinery in stats.hpp.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sg/core.hpp"
#include "sg/stats.hpp"

namespace sg {

enum class StanceClass { Approach, Avoid, NotApplicable };

inline const char* stance_name(StanceClass s) {
  switch (s) {
    case StanceClass::Approach: return "approach";
    case StanceClass::Avoid: return "avoid";
    case StanceClass::NotApplicable: return "not_applicable";
  }
  return "not_applicable";
}

/// Half-angle of the cone in which flying forward counts as approaching the
/// visible human.
inline constexpr double kStanceConeDeg = 45.0;

/// Geometric stance: what did this decision do about the nearest visible
/// human? Forward inside the cone approaches, as does any turn that shrinks
/// the bearing magnitude. Everything else while a human is visible avoids.
inline StanceClass classify_stance(const FlightRecord& record, const Observation& obs) {
  const SceneEntity* human = obs.nearest_human();
  if (!human) return StanceClass::NotApplicable;
  double b = human->bearing_deg;
  switch (record.action) {
    case Action::Forward:
      return std::abs(b) <= kStanceConeDeg ? StanceClass::Approach : StanceClass::Avoid;
    case Action::TurnRight:
      return b > 0 ? StanceClass::Approach : StanceClass::Avoid;
    case Action::TurnLeft:
      return b < 0 ? StanceClass::Approach : StanceClass::Avoid;
    default:
      return StanceClass::Avoid;
  }
}

/// Keyword fallback for logs without an observation sidecar. Applicable only
/// when the reason mentions a human at all; avoidance wording wins over
/// approach wording when both appear. Heuristic-grade: wording outside the
/// built-in voices may classify arbitrarily.
inline StanceClass stance_from_reason(const std::string& reason) {
  std::string lower = reason;
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  bool applicable = lower.find("human") != std::string::npos ||
                    lower.find("person") != std::string::npos;
  if (!applicable) return StanceClass::NotApplicable;
  for (const char* kw : {"away", "ascend", "avoid"})
    if (lower.find(kw) != std::string::npos) return StanceClass::Avoid;
  for (const char* kw : {"towards", "toward", "greet", "approach"})
    if (lower.find(kw) != std::string::npos) return StanceClass::Approach;
  return StanceClass::Avoid;
}

/// One flight log plus its optional observation sidecar. When observations
/// are present the list must align one-to-one with the records.
struct AnalysisInput {
  std::vector<FlightRecord> records;
  std::vector<Observation> observations;
};

struct PersonaAnalysis {
  std::string persona_id;
  std::uint64_t decisions = 0;
  std::vector<std::int64_t> category_counts;  // parallel to scheme.categories
  std::uint64_t approach = 0;
  std::uint64_t avoid = 0;
  std::uint64_t not_applicable = 0;
  std::optional<LatencyStats> latency;

  std::uint64_t stance_events() const { return approach + avoid; }
  double approach_rate() const {
    auto n = stance_events();
    return n == 0 ? 0.0 : static_cast<double>(approach) / static_cast<double>(n);
  }
};

struct AnalysisReport {
  std::string scheme_name;
  std::string stance_source;  // "observations", "reasons" or "mixed"
  std::vector<PersonaAnalysis> personas;
  ContingencyTable fingerprint;
  std::optional<ChiSquareResult> fingerprint_chi;
  std::string fingerprint_note;  // set when the chi-square was impossible
  std::optional<ContingencyTable> stance;
  std::optional<ChiSquareResult> stance_chi;
  std::string stance_note;
};

/// Builds the persona-by-category table for the fingerprint test.
inline ContingencyTable fingerprint_table(const std::vector<PersonaAnalysis>& personas,
                                          const CategoryScheme& scheme) {
  ContingencyTable t;
  t.col_labels = scheme.categories;
  for (const auto& p : personas) {
    t.row_labels.push_back(p.persona_id);
    t.counts.push_back(p.category_counts);
  }
  return t;
}

/// Aggregates inputs (grouping by persona_id in order of first appearance),
/// classifies stances, and runs both chi-square tests where possible.
inline AnalysisReport analyze_flights(const std::vector<AnalysisInput>& inputs,
                                      const CategoryScheme& scheme) {
  for (const auto& in : inputs)
    if (!in.observations.empty() && in.observations.size() != in.records.size())
      throw Error(Err::Schema, "observation sidecar does not align with its flight log (" +
                                   std::to_string(in.observations.size()) + " observations for " +
                                   std::to_string(in.records.size()) + " records)");

  AnalysisReport report;
  report.scheme_name = scheme.name;

  std::vector<PersonaAnalysis> personas;
  std::map<std::string, std::size_t> index_of;
  std::map<std::string, std::vector<double>> latencies;
  bool any_obs = false;
  bool any_reason_fallback = false;

  for (const auto& in : inputs) {
    bool has_obs = !in.observations.empty();
    for (std::size_t i = 0; i < in.records.size(); ++i) {
      const FlightRecord& r = in.records[i];
      auto [it, inserted] = index_of.try_emplace(r.persona_id, personas.size());
      if (inserted) {
        PersonaAnalysis p;
        p.persona_id = r.persona_id;
        p.category_counts.assign(scheme.categories.size(), 0);
        personas.push_back(std::move(p));
      }
      PersonaAnalysis& p = personas[it->second];
      ++p.decisions;
      p.category_counts[static_cast<std::size_t>(categorize_action(r.action, scheme))] += 1;
      latencies[r.persona_id].push_back(static_cast<double>(r.latency_ms) / 1000.0);

      StanceClass stance;
      if (has_obs) {
        stance = classify_stance(r, in.observations[i]);
        any_obs = true;
      } else {
        stance = stance_from_reason(r.reason);
        any_reason_fallback = true;
      }
      switch (stance) {
        case StanceClass::Approach: ++p.approach; break;
        case StanceClass::Avoid: ++p.avoid; break;
        case StanceClass::NotApplicable: ++p.not_applicable; break;
      }
    }
  }

  for (auto& p : personas) {
    const auto& lats = latencies[p.persona_id];
    if (lats.size() >= 2) p.latency = latency_stats_seconds(lats);
  }

  report.stance_source = any_obs && any_reason_fallback ? "mixed"
                         : any_obs                      ? "observations"
                                                        : "reasons";
  report.personas = std::move(personas);

  report.fingerprint = fingerprint_table(report.personas, scheme);
  try {
    report.fingerprint_chi = chi_square_independence(report.fingerprint);
  } catch (const Error& e) {
    report.fingerprint_note = e.what();
  }

  ContingencyTable st;
  st.col_labels = {"approach", "avoid"};
  for (const auto& p : report.personas) {
    if (p.stance_events() == 0) continue;
    st.row_labels.push_back(p.persona_id);
    st.counts.push_back({static_cast<std::int64_t>(p.approach), static_cast<std::int64_t>(p.avoid)});
  }
  if (!st.counts.empty()) {
    report.stance = st;
    try {
      report.stance_chi = chi_square_independence(st);
    } catch (const Error& e) {
      report.stance_note = e.what();
    }
  } else {
    report.stance_note = "no human-applicable decisions in any input";
  }
  return report;
}

// ---------------------------------------------------------------------------
// JSON rendering for the analyze command

namespace detail {

inline nlohmann::ordered_json table_to_json(const ContingencyTable& t) {
  nlohmann::ordered_json j;
  j["rows"] = t.row_labels;
  j["cols"] = t.col_labels;
  j["counts"] = t.counts;
  return j;
}

inline nlohmann::ordered_json chi_to_json(const ChiSquareResult& r) {
  nlohmann::ordered_json j;
  j["statistic"] = r.statistic;
  j["df"] = r.df;
  j["p_value"] = r.p_value;
  j["n"] = r.n;
  j["cramers_v"] = r.cramers_v;
  j["low_expected"] = r.low_expected;
  return j;
}

}  // namespace detail

inline nlohmann::ordered_json report_to_json(const AnalysisReport& report) {
  nlohmann::ordered_json j;
  j["kind"] = "sg-analysis-report";
  j["version"] = 1;
  j["scheme"] = report.scheme_name;
  j["stance_source"] = report.stance_source;

  j["personas"] = nlohmann::ordered_json::array();
  for (const auto& p : report.personas) {
    nlohmann::ordered_json pj;
    pj["persona_id"] = p.persona_id;
    pj["decisions"] = p.decisions;
    pj["category_counts"] = p.category_counts;
    pj["approach"] = p.approach;
    pj["avoid"] = p.avoid;
    pj["not_applicable"] = p.not_applicable;
    pj["approach_rate"] = p.approach_rate();
    if (p.latency) {
      pj["latency"] = {{"mean_s", p.latency->mean_s}, {"sd_s", p.latency->sd_s}, {"n", p.latency->n}};
    } else {
      pj["latency"] = nullptr;
    }
    j["personas"].push_back(std::move(pj));
  }

  j["fingerprint"] = detail::table_to_json(report.fingerprint);
  j["fingerprint"]["chi_square"] =
      report.fingerprint_chi ? detail::chi_to_json(*report.fingerprint_chi)
                             : nlohmann::ordered_json(nullptr);
  if (!report.fingerprint_note.empty()) j["fingerprint"]["note"] = report.fingerprint_note;

  if (report.stance) {
    j["stance"] = detail::table_to_json(*report.stance);
    j["stance"]["chi_square"] = report.stance_chi ? detail::chi_to_json(*report.stance_chi)
                                                  : nlohmann::ordered_json(nullptr);
    if (!report.stance_note.empty()) j["stance"]["note"] = report.stance_note;
  } else {
    j["stance"] = nullptr;
    if (!report.stance_note.empty()) j["stance_note"] = report.stance_note;
  }
  return j;
}

}  // namespace sg

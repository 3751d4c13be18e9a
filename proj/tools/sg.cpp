// sg: ground station for a semantically piloted blimp.
//   sg fly      run one persona flight, simulated or against a live robot
//   sg emulate  host the robot-side emulator on a WebSocket port
//   sg analyze  offline statistics over recorded flight logs

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "sg/analytics.hpp"
#include "sg/config.hpp"
#include "sg/emulator.hpp"
#include "sg/flight.hpp"
#include "sg/live.hpp"
#include "sg/logio.hpp"
#include "sg/mind.hpp"

namespace {

volatile std::sig_atomic_t g_interrupted = 0;
void on_signal(int) { g_interrupted = 1; }

std::string iso_utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct FlyArgs {
  std::string mode = "sim";
  std::string persona_path;
  std::string env_path;
  std::string robot_url;
  std::string backend_kind = "scripted";
  std::string endpoint;
  std::string model_id = "mllm";
  std::string api_key_ref = "SG_MLLM_API_KEY";
  int timeout_ms = 30000;
  int max_tokens = 256;
  double duration_s = 60.0;
  std::uint64_t seed = 1;
  double fov_deg = 160.0;
  double max_range_m = 8.0;
  std::string log_path = "flight.jsonl";
  std::string obs_path;
  std::string manifest_path;
  std::string from_manifest;
  bool quiet = false;
  bool log_path_given = false;
};

int cmd_fly(const FlyArgs& a) {
  sg::RunManifest m;
  if (!a.from_manifest.empty()) {
    m = sg::read_manifest(a.from_manifest);
    if (a.log_path_given) {
      m.out_log_path = a.log_path;
      m.observations_path = a.obs_path;
    }
  } else {
    m.mode = a.mode;
    if (a.persona_path.empty())
      throw sg::Error(sg::Err::Config, "--persona is required (a persona TOML file)");
    m.persona_path = a.persona_path;
    m.persona = sg::load_persona(a.persona_path);
    if (m.mode == "sim") {
      if (a.env_path.empty())
        throw sg::Error(sg::Err::Config, "--env is required in sim mode (an environment TOML file)");
      m.env_path = a.env_path;
      m.environment = sg::load_environment(a.env_path);
    } else {
      if (a.robot_url.empty())
        throw sg::Error(sg::Err::Config, "--robot is required in live mode (a ws:// URL)");
      m.robot_url = a.robot_url;
    }
    if (a.backend_kind == "remote") {
      if (a.endpoint.empty())
        throw sg::Error(sg::Err::Config, "--endpoint is required with --backend remote");
      sg::RemoteConfig rc;
      rc.endpoint_url = a.endpoint;
      rc.model_id = a.model_id;
      rc.api_key_ref = a.api_key_ref;
      rc.timeout_ms = a.timeout_ms;
      rc.max_tokens = a.max_tokens;
      m.backend = sg::MindBackend::make_remote(std::move(rc));
    } else {
      m.backend = sg::MindBackend::make_scripted(m.persona.policy);
    }
    m.duration_s = a.duration_s;
    m.seed = a.seed;
    m.fov_deg = a.fov_deg;
    m.max_range_m = a.max_range_m;
    m.out_log_path = a.log_path;
    m.observations_path = a.obs_path;
  }

  m.git_describe_of_build = SG_BUILD_DESCRIBE;
  m.started_at = iso_utc_now();

  sg::FlightLog log;
  if (m.mode == "sim") {
    log = sg::run_flight(m.persona, m.backend, m.environment, m.duration_s, m.seed, m.sim,
                         m.fov_deg, m.max_range_m);
    sg::write_flight_log(m.out_log_path, log.records);
    sg::write_observations(m.effective_observations_path(), log.observations);
  } else {
    sg::FlightLogWriter writer(m.out_log_path);
    log = sg::run_live_flight(m.persona, m.backend, m.robot_url, m.duration_s, m.seed, &writer);
    sg::write_observations(m.effective_observations_path(), log.observations);
  }

  m.finished_at = iso_utc_now();
  std::string manifest_path =
      a.manifest_path.empty() ? m.out_log_path + ".manifest.json" : a.manifest_path;
  sg::write_manifest(manifest_path, m);

  if (!a.quiet)
    for (const auto& r : log.records)
      std::cout << sg::letter_from_action(r.action) << ", " << r.reason << "\n";

  std::cerr << "flight: " << log.records.size() << " decisions, collision rate "
            << log.collision_rate() << ", parse fallbacks " << log.parse_failures
            << ", transport fallbacks " << log.transport_failures << "\n";
  std::cerr << "log: " << m.out_log_path << "  observations: " << m.effective_observations_path()
            << "  manifest: " << manifest_path << "\n";

  if (log.truncated) {
    std::cerr << "flight ended early: " << log.truncation_detail << "\n";
    return log.truncation_error ? sg::exit_code_for(*log.truncation_error) : 1;
  }
  return 0;
}

struct EmulateArgs {
  std::string env_path;
  std::string listen = "127.0.0.1:8765";
  std::string port_file;
  int frame_period_ms = 500;
  bool send_obs = true;
  std::string truth_log = "emulator-truth.jsonl";
  double time_scale = 1.0;
  std::uint64_t seed = 1;
  double duration_s = 0.0;  // 0 = until interrupted
  double fov_deg = 160.0;
  double max_range_m = 8.0;
};

int cmd_emulate(const EmulateArgs& a) {
  sg::Environment env = sg::load_environment(a.env_path);

  sg::EmulatorConfig cfg;
  auto colon = a.listen.rfind(':');
  if (colon == std::string::npos)
    throw sg::Error(sg::Err::Config, "--listen expects HOST:PORT, got '" + a.listen + "'");
  cfg.host = a.listen.substr(0, colon);
  try {
    cfg.port = std::stoi(a.listen.substr(colon + 1));
  } catch (const std::exception&) {
    throw sg::Error(sg::Err::Config, "--listen expects HOST:PORT, got '" + a.listen + "'");
  }
  cfg.frame_period_s = a.frame_period_ms / 1000.0;
  cfg.send_observations = a.send_obs;
  cfg.time_scale = a.time_scale;
  cfg.fov_deg = a.fov_deg;
  cfg.max_range_m = a.max_range_m;
  cfg.sim.rng_seed = a.seed;

  sg::Emulator emu(std::move(env), cfg);
  emu.start();

  if (!a.port_file.empty()) {
    std::ofstream pf(a.port_file, std::ios::binary);
    if (!pf) throw sg::Error(sg::Err::Config, "cannot write " + a.port_file);
    pf << emu.port() << "\n";
  }
  std::cout << "listening on " << emu.url() << "\n" << std::flush;

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  auto started = std::chrono::steady_clock::now();
  while (!g_interrupted) {
    if (a.duration_s > 0) {
      double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      if (elapsed >= a.duration_s) break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }

  emu.stop();
  sg::write_flight_log(a.truth_log, emu.truth_log());

  auto st = emu.stats();
  nlohmann::ordered_json j;
  j["truth_log"] = a.truth_log;
  j["sim_time_s"] = emu.sim_time_s();
  j["clients_served"] = st.clients_served;
  j["clients_refused"] = st.clients_refused;
  j["commands_applied"] = st.commands_applied;
  j["unknown_commands"] = st.unknown_commands;
  j["frames_sent"] = st.frames_sent;
  j["observations_sent"] = st.observations_sent;
  j["pings_sent"] = st.pings_sent;
  j["forced_stops"] = st.forced_stops;
  j["protocol_violations"] = st.protocol_violations;
  std::cout << j.dump() << "\n";
  return 0;
}

struct AnalyzeArgs {
  std::vector<std::string> log_paths;
  std::vector<std::string> obs_paths;
  std::string scheme_name = "advance-maneuver-halt";
  std::string report_path;
};

void print_table(const sg::ContingencyTable& t) {
  std::size_t w = 12;
  for (const auto& r : t.row_labels) w = std::max(w, r.size() + 2);
  std::cout << std::string(w, ' ');
  for (const auto& c : t.col_labels) std::cout << "  " << c;
  std::cout << "\n";
  for (std::size_t r = 0; r < t.rows(); ++r) {
    std::cout << t.row_labels[r] << std::string(w - t.row_labels[r].size(), ' ');
    for (std::size_t c = 0; c < t.cols(); ++c) {
      std::string cell = std::to_string(t.counts[r][c]);
      std::cout << "  " << std::string(t.col_labels[c].size() > cell.size()
                                           ? t.col_labels[c].size() - cell.size()
                                           : 0, ' ')
                << cell;
    }
    std::cout << "\n";
  }
}

void print_chi(const char* label, const std::optional<sg::ChiSquareResult>& chi,
               const std::string& note) {
  if (chi) {
    std::cout << label << ": chi2(" << chi->df << ", N=" << chi->n << ") = " << chi->statistic
              << ", p = " << chi->p_value << ", Cramer's V = " << chi->cramers_v;
    if (chi->low_expected) std::cout << "  [warning: expected count < 5 in some cell]";
    std::cout << "\n";
  } else {
    std::cout << label << ": not computed (" << note << ")\n";
  }
}

int cmd_analyze(const AnalyzeArgs& a, const std::string& which) {
  if (a.log_paths.empty()) throw sg::Error(sg::Err::Config, "at least one log file is required");
  if (!a.obs_paths.empty() && a.obs_paths.size() != a.log_paths.size())
    throw sg::Error(sg::Err::Config, "--obs must be given once per log (or not at all)");

  std::vector<sg::AnalysisInput> inputs;
  for (std::size_t i = 0; i < a.log_paths.size(); ++i) {
    sg::AnalysisInput in;
    in.records = sg::read_flight_log(a.log_paths[i]);
    std::string obs_path =
        i < a.obs_paths.size() ? a.obs_paths[i] : a.log_paths[i] + ".obs.jsonl";
    if (std::filesystem::exists(obs_path)) in.observations = sg::read_observations(obs_path);
    inputs.push_back(std::move(in));
  }

  const sg::CategoryScheme* scheme = sg::CategoryScheme::by_name(a.scheme_name);
  if (!scheme)
    throw sg::Error(sg::Err::Config, "unknown scheme '" + a.scheme_name +
                                         "' (known: advance-maneuver-halt, per-action)");
  sg::AnalysisReport report = sg::analyze_flights(inputs, *scheme);

  if (which == "fingerprint") {
    if (report.personas.size() < 2)
      throw sg::Error(sg::Err::Insufficient,
                      "fingerprint comparison needs at least 2 personas, got " +
                          std::to_string(report.personas.size()));
    std::cout << "behavioral fingerprint (" << scheme->name << ")\n";
    print_table(report.fingerprint);
    print_chi("independence", report.fingerprint_chi, report.fingerprint_note);
  } else if (which == "stance") {
    std::cout << "social stance (source: " << report.stance_source << ")\n";
    for (const auto& p : report.personas) {
      std::cout << "  " << p.persona_id << ": approach " << p.approach << ", avoid " << p.avoid
                << ", not applicable " << p.not_applicable;
      if (p.stance_events() > 0)
        std::cout << ", approach rate " << 100.0 * p.approach_rate() << "%";
      std::cout << "\n";
    }
    if (report.stance) {
      print_table(*report.stance);
      print_chi("independence", report.stance_chi, report.stance_note);
    } else {
      std::cout << "no human-applicable decisions; stance table not computed\n";
    }
  } else {  // latency
    std::cout << "decision latency\n";
    for (const auto& p : report.personas) {
      std::cout << "  " << p.persona_id << ": ";
      if (p.latency)
        std::cout << "mean " << p.latency->mean_s << " s, sd " << p.latency->sd_s << " s, n "
                  << p.latency->n << "\n";
      else
        std::cout << "fewer than 2 records, no statistics\n";
    }
  }

  if (!a.report_path.empty()) {
    std::ofstream out(a.report_path, std::ios::binary);
    if (!out) throw sg::Error(sg::Err::Config, "cannot write " + a.report_path);
    out << sg::report_to_json(report).dump(2) << "\n";
    std::cerr << "report: " << a.report_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ground station for a semantically piloted blimp"};
  app.set_version_flag("--version", std::string("sg ") + SG_BUILD_DESCRIBE);
  app.require_subcommand(0, 1);

  FlyArgs fa;
  auto* fly = app.add_subcommand("fly", "run one persona flight (simulated or live)");
  fly->add_option("--mode", fa.mode, "sim or live")
      ->check(CLI::IsMember({"sim", "live"}))
      ->capture_default_str();
  fly->add_option("--persona", fa.persona_path, "persona TOML file");
  fly->add_option("--env", fa.env_path, "environment TOML file (sim mode)");
  fly->add_option("--robot", fa.robot_url, "robot ws:// URL (live mode)");
  fly->add_option("--backend", fa.backend_kind, "mind backend")
      ->check(CLI::IsMember({"scripted", "remote"}))
      ->capture_default_str();
  fly->add_option("--endpoint", fa.endpoint, "remote chat-completions URL (http://...)");
  fly->add_option("--model", fa.model_id, "remote model id")->capture_default_str();
  fly->add_option("--api-key-ref", fa.api_key_ref,
                  "NAME of the environment variable holding the API key")
      ->capture_default_str();
  fly->add_option("--timeout-ms", fa.timeout_ms, "remote request timeout")->capture_default_str();
  fly->add_option("--max-tokens", fa.max_tokens, "remote completion budget")->capture_default_str();
  fly->add_option("--duration", fa.duration_s, "flight duration in seconds")->capture_default_str();
  fly->add_option("--seed", fa.seed, "run seed")->capture_default_str();
  fly->add_option("--fov-deg", fa.fov_deg, "camera field of view")->capture_default_str();
  fly->add_option("--max-range-m", fa.max_range_m, "camera range")->capture_default_str();
  auto* log_opt = fly->add_option("-o,--log", fa.log_path, "output JSONL log")->capture_default_str();
  fly->add_option("--obs-log", fa.obs_path, "observation sidecar (default <log>.obs.jsonl)");
  fly->add_option("--manifest", fa.manifest_path, "manifest path (default <log>.manifest.json)");
  fly->add_option("--from-manifest", fa.from_manifest,
                  "replay a recorded manifest instead of reading flags");
  fly->add_flag("--quiet", fa.quiet, "suppress per-decision output lines");

  EmulateArgs ea;
  auto* em = app.add_subcommand("emulate", "host the robot emulator");
  em->add_option("--env", ea.env_path, "environment TOML file")->required();
  em->add_option("--listen", ea.listen, "HOST:PORT to listen on (port 0 = ephemeral)")
      ->capture_default_str();
  em->add_option("--port-file", ea.port_file, "write the bound port to this file");
  em->add_option("--frame-period-ms", ea.frame_period_ms, "camera frame period (simulated ms)")
      ->capture_default_str();
  em->add_flag("--obs,!--no-obs", ea.send_obs, "send observation lines with each frame")
      ->capture_default_str();
  em->add_option("--truth-log", ea.truth_log, "sim-truth JSONL written on exit")
      ->capture_default_str();
  em->add_option("--time-scale", ea.time_scale, "simulated seconds per wall second")
      ->capture_default_str();
  em->add_option("--seed", ea.seed, "simulator seed")->capture_default_str();
  em->add_option("--duration", ea.duration_s, "stop after this many wall seconds (0 = run until interrupted)")
      ->capture_default_str();
  em->add_option("--fov-deg", ea.fov_deg, "observation field of view")->capture_default_str();
  em->add_option("--max-range-m", ea.max_range_m, "observation range")->capture_default_str();

  AnalyzeArgs aa;
  auto* an = app.add_subcommand("analyze", "offline analysis of flight logs");
  an->require_subcommand(1);
  const char* sub_help[] = {"behavioral fingerprint table + chi-square test",
                            "approach/avoid stance summary + chi-square test",
                            "decision latency statistics"};
  CLI::App* subs[3];
  const char* sub_names[] = {"fingerprint", "stance", "latency"};
  for (int i = 0; i < 3; ++i) {
    auto* sub = an->add_subcommand(sub_names[i], sub_help[i]);
    sub->add_option("logs", aa.log_paths, "flight log JSONL files")->required();
    sub->add_option("--obs", aa.obs_paths,
                    "observation sidecars, one per log (default: <log>.obs.jsonl when present)");
    sub->add_option("--scheme", aa.scheme_name, "category scheme")->capture_default_str();
    sub->add_option("--report", aa.report_path, "write the full JSON report here");
    subs[i] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (fly->parsed()) {
      fa.log_path_given = log_opt->count() > 0;
      return cmd_fly(fa);
    }
    if (em->parsed()) return cmd_emulate(ea);
    if (an->parsed()) {
      for (int i = 0; i < 3; ++i)
        if (subs[i]->parsed()) return cmd_analyze(aa, sub_names[i]);
    }
    std::cout << app.help();
    return 2;
  } catch (const sg::Error& e) {
    std::cerr << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "Error: " << e.what() << "\n";
    return 1;
  }
}

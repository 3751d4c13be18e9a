#pragma once

// The two-stage mind: a preamble turn that builds a mental map and must be
// acknowledged with the ready phrase, then one decide turn per percept.
// Backends: Remote (an OpenAI-style chat-completions endpoint, images in,
// "letter,reason" out) and Scripted (the deterministic stand-in policy).

#include <chrono>
#include <cstdint>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "sg/base64.hpp"
#include "sg/core.hpp"
#include "sg/parse.hpp"
#include "sg/policy.hpp"
#include "sg/rng.hpp"

namespace sg {

/// Substring the preamble acknowledgment must contain.
inline constexpr std::string_view kReadyPhrase = "Ready to explore";
/// What the scripted backend answers the preamble with.
inline constexpr std::string_view kReadyAck = "Ready to explore.";

inline constexpr std::string_view kParseFallbackReason =
    "Holding position: the last reply was not a movement command.";
inline constexpr std::string_view kTransportFallbackReason =
    "Holding position: the mind backend is unreachable.";

using JpegBytes = std::vector<std::uint8_t>;
/// What a mind turn perceives: a camera frame or its structured stand-in.
using Percept = std::variant<JpegBytes, Observation>;

struct RemoteConfig {
  std::string endpoint_url;  // e.g. http://127.0.0.1:8090/v1/chat/completions
  std::string model_id = "mllm";
  /// Name of the environment variable holding the API key. The key itself is
  /// never stored; an unset variable simply sends no Authorization header.
  std::string api_key_ref = "SG_MLLM_API_KEY";
  int timeout_ms = 30000;
  int max_tokens = 256;
};

struct MindBackend {
  enum class Kind { Scripted, Remote } kind = Kind::Scripted;
  ScriptedPolicyParams scripted;
  RemoteConfig remote;

  static MindBackend make_scripted(ScriptedPolicyParams p) {
    MindBackend b;
    b.kind = Kind::Scripted;
    b.scripted = p;
    return b;
  }
  static MindBackend make_remote(RemoteConfig c) {
    MindBackend b;
    b.kind = Kind::Remote;
    b.remote = std::move(c);
    return b;
  }
};

struct TranscriptEntry {
  std::string role;  // "user" | "assistant"
  std::string content;
};

/// Compact text rendering of an observation, used for transcript entries and
/// for feeding structured percepts to a text-capable remote backend.
inline std::string describe_observation(const Observation& obs) {
  std::ostringstream out;
  out << "fov_deg=" << obs.fov_deg << "; entities:";
  if (obs.entities.empty()) out << " (none)";
  for (const auto& e : obs.entities) {
    out << ' ' << entity_kind_name(e.kind) << "[bearing=" << std::llround(e.bearing_deg)
        << " range=" << std::llround(e.range_m * 100.0) / 100.0;
    if (!e.label.empty()) out << " label=\"" << e.label << '"';
    out << ']';
  }
  return out.str();
}

/// Folds one panorama into the four-category mental map. Entities keep their
/// label when they have one; unlabeled entities fall back to the kind name,
/// except open space which is tagged with its bearing (OpenSpace@-40).
/// Humans are transient and never enter the map. First occurrence wins.
inline MentalMap mental_map_from(const Observation& panorama) {
  MentalMap map;
  auto push_unique = [](std::vector<std::string>& v, const std::string& s) {
    for (const auto& existing : v)
      if (existing == s) return;
    v.push_back(s);
  };
  for (const auto& e : panorama.entities) {
    std::string name = e.label;
    if (name.empty()) {
      if (e.kind == EntityKind::OpenSpace)
        name = "OpenSpace@" + std::to_string(std::llround(e.bearing_deg));
      else
        name = entity_kind_name(e.kind);
    }
    switch (e.kind) {
      case EntityKind::Wall:
      case EntityKind::Window: push_unique(map.boundaries, name); break;
      case EntityKind::Landmark: push_unique(map.landmarks, name); break;
      case EntityKind::OpenSpace: push_unique(map.fly_zones, name); break;
      case EntityKind::Obstacle: push_unique(map.obstacles, name); break;
      case EntityKind::Human: break;
    }
  }
  return map;
}

namespace detail {

struct SplitUrl {
  std::string base;  // scheme://host[:port]
  std::string path;  // leading '/'
};

inline SplitUrl split_http_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(Err::Config, "endpoint url needs a scheme: " + url);
  std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https")
    throw Error(Err::Config, "endpoint url must be http(s): " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

inline std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace detail

/// One conversation with one mind. Move-only; exactly one flight loop drives
/// it. Create with start_session().
class MindSession {
 public:
  MindSession(MindSession&&) = default;
  MindSession& operator=(MindSession&&) = default;

  const PersonaSpec& persona() const { return persona_; }
  MindBackend::Kind kind() const { return backend_.kind; }
  bool ready() const { return ready_; }
  /// Wall-clock span of the preamble round-trip (the session-priming cost).
  std::int64_t preamble_latency_ms() const { return preamble_latency_ms_; }
  /// Scripted sessions expose their synthesized map; remote minds keep
  /// theirs on the other side of the wire.
  const std::optional<MentalMap>& mental_map() const { return mental_map_; }
  /// user/assistant alternation: 2 entries after the preamble, +2 per decide.
  const std::vector<TranscriptEntry>& transcript() const { return transcript_; }
  std::uint64_t parse_failure_count() const { return parse_failures_; }
  std::uint64_t transport_failure_count() const { return transport_failures_; }

  /// One percept in, one decision out. Never throws on a flaky backend:
  /// unparseable replies and transport failures degrade to Stop with a
  /// descriptive fallback reason and bump the matching failure counter.
  Decision decide(const Percept& percept) {
    if (!ready_) throw Error(Err::Internal, "decide() before start_session completed");
    if (backend_.kind == MindBackend::Kind::Scripted) return decide_scripted(percept);
    return decide_remote(percept);
  }

 private:
  friend MindSession start_session(const MindBackend&, const PersonaSpec&, const Percept&);

  MindSession(MindBackend backend, PersonaSpec persona)
      : backend_(std::move(backend)), persona_(std::move(persona)) {}

  // -- scripted ------------------------------------------------------------

  void start_scripted(const Percept& panorama) {
    const auto* obs = std::get_if<Observation>(&panorama);
    if (!obs) throw Error(Err::Config, "scripted backend needs a structured panorama");
    if (obs->entities.empty()) throw Error(Err::EmptyPanorama, "panorama has no entities");
    mental_map_ = mental_map_from(*obs);
    rng_ = Rng(backend_.scripted.rng_seed);
    transcript_.push_back({"user", persona_.preamble_prompt});
    transcript_.push_back({"assistant", std::string(kReadyAck)});
    preamble_latency_ms_ = 0;
    ready_ = true;
  }

  Decision decide_scripted(const Percept& percept) {
    const auto* obs = std::get_if<Observation>(&percept);
    if (!obs) throw Error(Err::Config, "scripted backend needs structured percepts");
    Decision d = scripted_policy(backend_.scripted, *obs, rng_, persona_.voice);
    transcript_.push_back({"user", describe_observation(*obs)});
    transcript_.push_back(
        {"assistant", std::string(1, letter_from_action(d.action)) + "," + d.reason});
    return d;
  }

  // -- remote --------------------------------------------------------------

  void start_remote(const Percept& panorama) {
    if (const auto* img = std::get_if<JpegBytes>(&panorama)) {
      if (img->empty()) throw Error(Err::EmptyPanorama, "panorama image is empty");
      panorama_b64_ = base64_encode(*img);
    } else {
      const auto& obs = std::get<Observation>(panorama);
      if (obs.entities.empty()) throw Error(Err::EmptyPanorama, "panorama has no entities");
      panorama_text_ = describe_observation(obs);
    }
    auto url = detail::split_http_url(backend_.remote.endpoint_url);
    client_ = std::make_unique<httplib::Client>(url.base);
    path_ = url.path;
    client_->set_connection_timeout(0, backend_.remote.timeout_ms * 1000LL);
    client_->set_read_timeout(backend_.remote.timeout_ms / 1000,
                              (backend_.remote.timeout_ms % 1000) * 1000);
    if (const char* key = std::getenv(backend_.remote.api_key_ref.c_str()); key && *key)
      client_->set_bearer_token_auth(key);

    std::int64_t t0 = detail::now_ms();
    std::string reply = post_preamble();
    if (reply.find(kReadyPhrase) == std::string::npos) reply = post_preamble();  // one retry
    preamble_latency_ms_ = std::max<std::int64_t>(detail::now_ms() - t0, 1);
    if (reply.find(kReadyPhrase) == std::string::npos)
      throw Error(Err::AckMismatch, "preamble reply lacks the ready phrase: " + reply);
    transcript_.push_back({"user", persona_.preamble_prompt});
    transcript_.push_back({"assistant", reply});
    ready_ = true;
  }

  std::string post_preamble() {
    nlohmann::json messages = nlohmann::json::array();
    messages.push_back(preamble_message());
    auto reply = post_chat(messages);
    if (!reply) throw Error(Err::Transport, "preamble request failed: " + transport_detail_);
    return *reply;
  }

  Decision decide_remote(const Percept& percept) {
    // The endpoint is stateless, so every turn resends the whole transcript;
    // the panorama keeps its image, earlier frames are elided to placeholders.
    nlohmann::json messages = nlohmann::json::array();
    messages.push_back(preamble_message());
    messages.push_back({{"role", "assistant"}, {"content", transcript_[1].content}});
    for (std::size_t i = 2; i < transcript_.size(); i += 2) {
      messages.push_back({{"role", "user"},
                          {"content", persona_.directional_prompt + "\n[earlier frame]"}});
      messages.push_back({{"role", "assistant"}, {"content", transcript_[i + 1].content}});
    }
    messages.push_back(percept_message(percept));

    std::int64_t t0 = detail::now_ms();
    auto reply = post_chat(messages);
    std::int64_t latency = std::max<std::int64_t>(detail::now_ms() - t0, 1);

    transcript_.push_back({"user", persona_.directional_prompt});
    if (!reply) {
      ++transport_failures_;
      transcript_.push_back({"assistant", "(transport failure)"});
      return Decision{Action::Stop, std::string(kTransportFallbackReason), latency};
    }
    transcript_.push_back({"assistant", *reply});
    if (auto parsed = parse_decision(*reply))
      return Decision{parsed->action, parsed->reason, latency};
    ++parse_failures_;
    return Decision{Action::Stop, std::string(kParseFallbackReason), latency};
  }

  nlohmann::json preamble_message() const {
    if (!panorama_b64_.empty()) {
      return {{"role", "user"},
              {"content",
               nlohmann::json::array(
                   {{{"type", "text"}, {"text", persona_.preamble_prompt}},
                    {{"type", "image_url"},
                     {"image_url",
                      {{"url", "data:image/jpeg;base64," + panorama_b64_}}}}})}};
    }
    return {{"role", "user"}, {"content", persona_.preamble_prompt + "\n" + panorama_text_}};
  }

  nlohmann::json percept_message(const Percept& percept) const {
    if (const auto* img = std::get_if<JpegBytes>(&percept)) {
      return {{"role", "user"},
              {"content",
               nlohmann::json::array(
                   {{{"type", "text"}, {"text", persona_.directional_prompt}},
                    {{"type", "image_url"},
                     {"image_url",
                      {{"url", "data:image/jpeg;base64," + base64_encode(*img)}}}}})}};
    }
    const auto& obs = std::get<Observation>(percept);
    return {{"role", "user"},
            {"content", persona_.directional_prompt + "\n" + describe_observation(obs)}};
  }

  /// POSTs one chat-completion request. nullopt = transport-level failure
  /// (connect/timeout/non-200/malformed envelope), detail in transport_detail_.
  std::optional<std::string> post_chat(nlohmann::json messages) {
    nlohmann::json body = {{"model", backend_.remote.model_id},
                           {"max_tokens", backend_.remote.max_tokens},
                           {"messages", std::move(messages)}};
    auto res = client_->Post(path_, body.dump(), "application/json");
    if (!res) {
      transport_detail_ = httplib::to_string(res.error());
      return std::nullopt;
    }
    if (res->status != 200) {
      transport_detail_ = "http status " + std::to_string(res->status);
      return std::nullopt;
    }
    try {
      auto j = nlohmann::json::parse(res->body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      transport_detail_ = std::string("malformed completion envelope: ") + e.what();
      return std::nullopt;
    }
  }

  MindBackend backend_;
  PersonaSpec persona_;
  Rng rng_{0};
  std::unique_ptr<httplib::Client> client_;
  std::string path_;
  std::string panorama_b64_;
  std::string panorama_text_;
  std::string transport_detail_;
  std::vector<TranscriptEntry> transcript_;
  std::optional<MentalMap> mental_map_;
  std::int64_t preamble_latency_ms_ = 0;
  std::uint64_t parse_failures_ = 0;
  std::uint64_t transport_failures_ = 0;
  bool ready_ = false;
};

/// Primes a mind with the persona preamble and the spawn-point panorama.
/// Throws EmptyPanorama, AckMismatch, Transport or ConfigError; on success
/// the session is ready() and holds a 2-entry transcript.
inline MindSession start_session(const MindBackend& backend, const PersonaSpec& persona,
                                 const Percept& panorama) {
  MindSession s(backend, persona);
  if (backend.kind == MindBackend::Kind::Scripted)
    s.start_scripted(panorama);
  else
    s.start_remote(panorama);
  return s;
}

}  // namespace sg

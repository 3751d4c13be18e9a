#pragma once

// Robot-side emulator: a single-client WebSocket server that flies the
// simulator in (scaled) real time, streams stamped JPEG frames plus
// observation lines, and obeys single-letter command frames. A second
// concurrent client gets a plain HTTP 503.

#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sg/core.hpp"
#include "sg/jpeg.hpp"
#include "sg/logio.hpp"
#include "sg/sim.hpp"
#include "sg/ws.hpp"

namespace sg {

struct EmulatorConfig {
  std::string host = "127.0.0.1";
  int port = 0;  // 0 = ephemeral; read the bound port from port()
  double frame_period_s = 0.5;
  bool send_observations = true;
  double ping_interval_s = 5.0;
  int max_missed_pongs = 2;
  double time_scale = 1.0;  // simulated seconds per wall second
  double fov_deg = 160.0;
  double max_range_m = 8.0;
  SimConfig sim;
};

struct EmulatorStats {
  std::uint64_t clients_served = 0;
  std::uint64_t clients_refused = 0;
  std::uint64_t commands_applied = 0;
  std::uint64_t unknown_commands = 0;
  std::uint64_t frames_sent = 0;
  std::uint64_t observations_sent = 0;
  std::uint64_t pings_sent = 0;
  std::uint64_t forced_stops = 0;
  std::uint64_t protocol_violations = 0;
};

class Emulator {
 public:
  Emulator(Environment env, EmulatorConfig cfg = {})
      : env_(std::move(env)), cfg_(cfg), sim_(env_, cfg.sim) {
    if (cfg_.frame_period_s <= 0) throw Error(Err::Config, "frame_period_s must be positive");
    if (cfg_.time_scale <= 0) throw Error(Err::Config, "time_scale must be positive");
  }

  ~Emulator() { stop(); }
  Emulator(const Emulator&) = delete;
  Emulator& operator=(const Emulator&) = delete;

  /// Binds the listener (throwing Bind synchronously) and starts the
  /// service thread.
  void start() {
    if (thread_.joinable()) throw Error(Err::Internal, "emulator already started");
    listener_.emplace(cfg_.host, cfg_.port);
    stop_flag_ = false;
    thread_ = std::thread([this] { run(); });
  }

  void stop() {
    stop_flag_ = true;
    if (thread_.joinable()) thread_.join();
    listener_.reset();
  }

  int port() const {
    if (!listener_) throw Error(Err::Internal, "emulator is not started");
    return listener_->port();
  }

  std::string url() const {
    return "ws://" + cfg_.host + ":" + std::to_string(port()) + "/";
  }

  EmulatorStats stats() const {
    std::lock_guard lock(mu_);
    return stats_;
  }

  std::vector<FlightRecord> truth_log() const {
    std::lock_guard lock(mu_);
    return truth_;
  }

  double sim_time_s() const {
    std::lock_guard lock(mu_);
    return sim_.time_s();
  }

 private:
  template <typename F>
  auto locked(F&& f) {
    std::lock_guard lock(mu_);
    return f();
  }

  void run() {
    while (!stop_flag_) {
      std::optional<ws::Socket> client;
      try {
        client = listener_->accept(50);
      } catch (const Error&) {
        break;  // listener torn down
      }
      if (!client) continue;
      serve(std::move(*client));
    }
  }

  void serve(ws::Socket sock) {
    std::optional<ws::FrameIO> io;
    try {
      io.emplace(ws::accept_handshake(std::move(sock), 2000));
    } catch (const Error&) {
      std::lock_guard lock(mu_);
      ++stats_.protocol_violations;
      return;
    }
    {
      std::lock_guard lock(mu_);
      ++stats_.clients_served;
    }

    auto wall_start = std::chrono::steady_clock::now();
    double sim_start = locked([&] { return sim_.time_s(); });
    double next_frame_at = sim_start;
    double next_ping_at = sim_start + cfg_.ping_interval_s;
    std::uint64_t frame_seq = 0;
    bool awaiting_pong = false;
    int missed_pongs = 0;

    auto sim_target = [&] {
      double wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
      return sim_start + wall_s * cfg_.time_scale;
    };

    try {
      while (!stop_flag_) {
        // A second client gets refused without disturbing the session.
        if (auto extra = listener_->accept(0)) {
          try {
            ws::refuse_busy(*extra);
          } catch (const Error&) {
          }
          std::lock_guard lock(mu_);
          ++stats_.clients_refused;
        }

        double target = sim_target();
        locked([&] { sim_.run_until(target); });

        if (target >= next_frame_at) {
          double t_now = locked([&] { return sim_.time_s(); });
          auto frame = stamp_frame(frame_seq++, static_cast<std::int64_t>(std::llround(t_now * 1000.0)));
          io->write_binary(frame);
          {
            std::lock_guard lock(mu_);
            ++stats_.frames_sent;
          }
          if (cfg_.send_observations) {
            Observation obs = locked([&] { return sim_.observe(cfg_.fov_deg, cfg_.max_range_m); });
            io->write_text(std::string(kObsPrefix) + observation_to_line(obs));
            std::lock_guard lock(mu_);
            ++stats_.observations_sent;
          }
          next_frame_at += cfg_.frame_period_s;
        }

        if (target >= next_ping_at) {
          if (awaiting_pong) ++missed_pongs;
          else missed_pongs = 0;
          if (missed_pongs >= cfg_.max_missed_pongs) {
            force_stop("heartbeat lost, holding position");
            missed_pongs = 0;
            awaiting_pong = false;
          } else {
            io->write_ping();
            awaiting_pong = true;
            std::lock_guard lock(mu_);
            ++stats_.pings_sent;
          }
          next_ping_at += cfg_.ping_interval_s;
        }

        if (!io->input_pending(2)) continue;
        auto frame = io->read_frame(1000);
        if (!frame) {
          force_stop("client vanished, holding position");
          return;
        }
        switch (frame->opcode) {
          case ws::Opcode::Text: {
            auto text = frame->text();
            if (text.size() != 1) {
              protocol_violation(*io, "command frames carry exactly one letter");
              return;
            }
            auto action = action_from_letter(text[0]);
            if (!action) {
              std::lock_guard lock(mu_);
              ++stats_.unknown_commands;
              break;
            }
            apply_command(*action);
            break;
          }
          case ws::Opcode::Binary:
            protocol_violation(*io, "clients do not send binary frames");
            return;
          case ws::Opcode::Pong:
            awaiting_pong = false;
            missed_pongs = 0;
            break;
          case ws::Opcode::Ping:
            io->write_pong(frame->payload);
            break;
          case ws::Opcode::Close:
            try {
              io->write_close();
            } catch (const Error&) {
            }
            force_stop("client signed off, holding position");
            return;
          default:
            protocol_violation(*io, "unexpected opcode");
            return;
        }
      }
      // Emulator shutting down: close politely.
      try {
        io->write_close();
      } catch (const Error&) {
      }
    } catch (const Error& e) {
      if (e.code() == Err::ProtocolViolation) {
        std::lock_guard lock(mu_);
        ++stats_.protocol_violations;
      }
      force_stop("link fault, holding position");
    }
  }

  void apply_command(Action action) {
    std::lock_guard lock(mu_);
    sim_.set_active(action);
    ++stats_.commands_applied;
    append_truth(action, "remote command");
  }

  void force_stop(const std::string& reason) {
    std::lock_guard lock(mu_);
    if (sim_.active() == Action::Stop && !truth_.empty() && truth_.back().reason == reason) return;
    sim_.set_active(Action::Stop);
    ++stats_.forced_stops;
    append_truth(Action::Stop, reason);
  }

  // Callers hold mu_.
  void append_truth(Action action, const std::string& reason) {
    FlightRecord r;
    r.t_ms = static_cast<std::int64_t>(std::llround(sim_.time_s() * 1000.0));
    if (!truth_.empty() && r.t_ms <= truth_.back().t_ms) r.t_ms = truth_.back().t_ms + 1;
    r.persona_id = "emulator";
    r.action = action;
    r.reason = reason;
    r.latency_ms = 0;
    r.pose = sim_.state().pose();
    r.human_visible = sim_.observe(cfg_.fov_deg, cfg_.max_range_m).has_human();
    std::uint64_t collisions = sim_.collision_count();
    r.collision = collisions > last_collisions_;
    last_collisions_ = collisions;
    truth_.push_back(std::move(r));
  }

  void protocol_violation(ws::FrameIO& io, const std::string& detail) {
    {
      std::lock_guard lock(mu_);
      ++stats_.protocol_violations;
    }
    try {
      io.write_close(1002);
    } catch (const Error&) {
    }
    force_stop("protocol violation: " + detail);
  }

  Environment env_;
  EmulatorConfig cfg_;
  mutable std::mutex mu_;
  Simulator sim_;
  std::vector<FlightRecord> truth_;
  std::uint64_t last_collisions_ = 0;
  EmulatorStats stats_;
  std::optional<ws::Listener> listener_;
  std::thread thread_;
  std::atomic<bool> stop_flag_{false};
};

}  // namespace sg

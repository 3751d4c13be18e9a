#pragma once

// Client side of the robot link: single-letter command frames out, JPEG
// camera frames and "#OBS " observation lines in. Frame delivery is
// newest-wins; stale frames are counted, not surfaced.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sg/core.hpp"
#include "sg/jpeg.hpp"
#include "sg/logio.hpp"
#include "sg/ws.hpp"

namespace sg {

struct LinkCounters {
  std::uint64_t commands_sent = 0;
  std::uint64_t frames_received = 0;
  std::uint64_t frames_dropped = 0;
  std::uint64_t pings_answered = 0;
};

class LinkClient {
 public:
  LinkClient() = default;
  LinkClient(const LinkClient&) = delete;
  LinkClient& operator=(const LinkClient&) = delete;

  void connect(const std::string& url, int timeout_ms = 5000) {
    io_.emplace(ws::connect(url, timeout_ms));
    closed_ = false;
  }

  bool connected() const { return io_.has_value() && !closed_; }

  void send_command(Action action) {
    require_open();
    char letter = letter_from_action(action);
    io_->write_text(std::string_view(&letter, 1));
    ++counters_.commands_sent;
  }

  /// Blocks up to timeout_ms for a camera frame, then drains whatever else
  /// already arrived and returns only the newest frame. Older frames are
  /// counted in frames_dropped. Observation lines and pings are handled
  /// along the way. Throws LinkClosed once the robot has hung up and
  /// CorruptFrame for binary payloads that are not JPEG images.
  std::vector<std::uint8_t> next_frame(int timeout_ms) {
    require_open();
    std::optional<std::vector<std::uint8_t>> newest = std::move(pending_frame_);
    pending_frame_.reset();
    // Block for the first frame, then keep draining while input is pending.
    while (true) {
      if (newest && !io_->input_pending(0)) break;
      auto frame = io_->read_frame(timeout_ms);
      if (!frame) {
        closed_ = true;
        if (newest) break;
        throw Error(Err::LinkClosed, "robot closed the link");
      }
      if (!handle(*frame, newest)) {
        if (newest) break;
        throw Error(Err::LinkClosed, "robot closed the link");
      }
    }
    return std::move(*newest);
  }

  /// Services pings/observations without waiting for a camera frame.
  void pump(int timeout_ms = 0) {
    require_open();
    std::optional<std::vector<std::uint8_t>> newest = std::move(pending_frame_);
    pending_frame_.reset();
    while (io_->input_pending(timeout_ms)) {
      timeout_ms = 0;
      auto frame = io_->read_frame(1000);
      if (!frame || !handle(*frame, newest)) {
        closed_ = true;
        return;
      }
    }
    if (newest) pending_frame_ = std::move(newest);
  }

  std::optional<Observation> latest_observation() const { return latest_obs_; }
  const LinkCounters& counters() const { return counters_; }

  void close() {
    if (!io_ || closed_) {
      io_.reset();
      return;
    }
    closed_ = true;
    try {
      io_->write_close();
      // Give the peer a moment to echo the close, then drop the socket.
      auto reply = io_->read_frame(200);
      (void)reply;
    } catch (const Error&) {
    }
    io_.reset();
  }

 private:
  void require_open() {
    if (!io_) throw Error(Err::LinkClosed, "link is not connected");
    if (closed_) throw Error(Err::LinkClosed, "link is closed");
  }

  // Returns false when the peer sent a close frame.
  bool handle(ws::Frame& frame, std::optional<std::vector<std::uint8_t>>& newest) {
    switch (frame.opcode) {
      case ws::Opcode::Binary: {
        ++counters_.frames_received;
        if (!looks_like_jpeg(frame.payload))
          throw Error(Err::CorruptFrame, "binary frame without JPEG markers");
        if (newest) ++counters_.frames_dropped;
        newest = std::move(frame.payload);
        return true;
      }
      case ws::Opcode::Text: {
        auto text = frame.text();
        if (text.rfind(kObsPrefix, 0) == 0) {
          auto body = text.substr(kObsPrefix.size());
          nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
          if (j.is_discarded()) throw Error(Err::CorruptFrame, "unparseable observation line");
          latest_obs_ = observation_from_json(j, 0);
        }
        return true;
      }
      case ws::Opcode::Ping:
        io_->write_pong(frame.payload);
        ++counters_.pings_answered;
        return true;
      case ws::Opcode::Pong:
        return true;
      case ws::Opcode::Close:
        try {
          io_->write_close();
        } catch (const Error&) {
        }
        closed_ = true;
        return false;
      default:
        throw Error(Err::ProtocolViolation, "unexpected opcode");
    }
  }

  std::optional<ws::FrameIO> io_;
  bool closed_ = true;
  LinkCounters counters_;
  std::optional<Observation> latest_obs_;
  std::optional<std::vector<std::uint8_t>> pending_frame_;
};

}  // namespace sg

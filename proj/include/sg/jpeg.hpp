#pragma once

// Camera-frame plumbing: the embedded base JPEG, the marker sanity check the
// link applies to every incoming frame, and the COM-segment stamp carrying
// (sequence, capture time) that lets tests prove newest-wins delivery.

#include <charconv>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sg/core.hpp"
#include "sg/jpeg_data.hpp"

namespace sg {

/// SOI prefix + EOI suffix; the contract every delivered frame must meet.
inline bool looks_like_jpeg(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 4 && bytes[0] == 0xFF && bytes[1] == 0xD8 &&
         bytes[bytes.size() - 2] == 0xFF && bytes[bytes.size() - 1] == 0xD9;
}

struct FrameStamp {
  std::uint64_t seq = 0;
  std::int64_t t_ms = 0;
};

/// Copy of the base frame with a COM segment "sg seq=<n> t_ms=<t>" spliced in
/// right after SOI. Still a valid baseline JPEG.
inline std::vector<std::uint8_t> stamp_frame(std::uint64_t seq, std::int64_t t_ms) {
  const auto& base = detail::kBaseFrameJpeg;
  std::string payload = "sg seq=" + std::to_string(seq) + " t_ms=" + std::to_string(t_ms);
  std::vector<std::uint8_t> out;
  out.reserve(base.size() + payload.size() + 4);
  out.push_back(0xFF);
  out.push_back(0xD8);
  out.push_back(0xFF);
  out.push_back(0xFE);  // COM
  std::uint16_t len = static_cast<std::uint16_t>(payload.size() + 2);
  out.push_back(static_cast<std::uint8_t>(len >> 8));
  out.push_back(static_cast<std::uint8_t>(len & 0xFF));
  out.insert(out.end(), payload.begin(), payload.end());
  out.insert(out.end(), base.begin() + 2, base.end());
  return out;
}

/// Recovers the stamp by walking the JPEG segment chain up to SOS. Returns
/// nullopt for frames without an sg COM segment.
inline std::optional<FrameStamp> read_stamp(std::span<const std::uint8_t> bytes) {
  if (!looks_like_jpeg(bytes)) return std::nullopt;
  std::size_t pos = 2;
  while (pos + 4 <= bytes.size()) {
    if (bytes[pos] != 0xFF) return std::nullopt;
    std::uint8_t marker = bytes[pos + 1];
    if (marker == 0xDA) return std::nullopt;  // SOS: entropy data, no stamp found
    std::size_t len = (static_cast<std::size_t>(bytes[pos + 2]) << 8) | bytes[pos + 3];
    if (len < 2 || pos + 2 + len > bytes.size()) return std::nullopt;
    if (marker == 0xFE) {
      std::string payload(reinterpret_cast<const char*>(bytes.data() + pos + 4), len - 2);
      if (payload.rfind("sg seq=", 0) == 0) {
        FrameStamp stamp;
        auto t_pos = payload.find(" t_ms=");
        if (t_pos == std::string::npos) return std::nullopt;
        const char* seq_begin = payload.data() + 7;
        const char* seq_end = payload.data() + t_pos;
        const char* t_begin = payload.data() + t_pos + 6;
        const char* t_end = payload.data() + payload.size();
        auto r1 = std::from_chars(seq_begin, seq_end, stamp.seq);
        auto r2 = std::from_chars(t_begin, t_end, stamp.t_ms);
        if (r1.ec != std::errc() || r2.ec != std::errc()) return std::nullopt;
        return stamp;
      }
    }
    pos += 2 + len;
  }
  return std::nullopt;
}

}  // namespace sg

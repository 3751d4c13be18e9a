#pragma once

// Parser for raw mind replies of the form "<letter>,<whimsical reason>".

#include <cctype>
#include <optional>
#include <string>
#include <string_view>

#include "sg/core.hpp"

namespace sg {

struct ParsedDecision {
  Action action = Action::Stop;
  std::string reason;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline bool is_quote(char c) { return c == '"' || c == '\'' || c == '`'; }

}  // namespace detail

/// Splits on the FIRST comma, trims whitespace, strips one layer of
/// surrounding quotes/backticks, and validates the letter through
/// action_from_letter. A missing comma with a single valid letter yields
/// that action with an empty reason. Returns nullopt when no valid action
/// letter can be extracted (the ParseFailure condition).
inline std::optional<ParsedDecision> parse_decision(std::string_view raw) {
  std::string_view s = detail::trim(raw);
  if (!s.empty() && detail::is_quote(s.front())) s.remove_prefix(1);
  if (!s.empty() && detail::is_quote(s.back())) s.remove_suffix(1);
  s = detail::trim(s);
  if (s.empty()) return std::nullopt;

  std::string_view letter_part = s;
  std::string_view reason_part;
  auto comma = s.find(',');
  if (comma != std::string_view::npos) {
    letter_part = detail::trim(s.substr(0, comma));
    reason_part = detail::trim(s.substr(comma + 1));
  }

  if (letter_part.size() != 1) return std::nullopt;
  char c = static_cast<char>(std::tolower(static_cast<unsigned char>(letter_part[0])));
  auto action = action_from_letter(c);
  if (!action) return std::nullopt;
  return ParsedDecision{*action, std::string(reason_part)};
}

}  // namespace sg

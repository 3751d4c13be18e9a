#pragma once

// Minimal TOML reader covering what the config files use: tables, arrays of
// tables, dotted headers, basic/literal/multiline strings, integers, floats,
// booleans, nested arrays and inline tables. Parses into nlohmann JSON so the
// config layer can share one lookup vocabulary. Unsupported TOML (dates,
// +inf/nan) fails loudly with a line number rather than misreading.

#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "sg/core.hpp"

namespace sg {

using TomlDoc = nlohmann::ordered_json;

namespace detail {

class TomlParser {
 public:
  TomlParser(std::string_view src, std::string origin)
      : src_(src), origin_(std::move(origin)) {}

  TomlDoc parse() {
    TomlDoc root = TomlDoc::object();
    TomlDoc* current = &root;
    for (;;) {
      skip_trivia();
      if (eof()) break;
      if (peek() == '[')
        current = parse_header(root);
      else
        parse_key_value(*current);
    }
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(Err::Config, origin_ + ":" + std::to_string(line_) + ": " + msg);
  }

  bool eof() const { return pos_ >= src_.size(); }
  char peek() const { return src_[pos_]; }
  char get() {
    char c = src_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  // Whitespace, newlines and comments between top-level items.
  void skip_trivia() {
    while (!eof()) {
      char c = peek();
      if (c == '#') {
        while (!eof() && peek() != '\n') ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        get();
      } else {
        break;
      }
    }
  }

  // Spaces and tabs only (stay on the line).
  void skip_inline_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }

  static bool is_bare_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  }

  std::string parse_key_segment() {
    skip_inline_ws();
    if (eof()) fail("expected a key");
    if (peek() == '"' || peek() == '\'') return parse_string_value().get<std::string>();
    std::string key;
    while (!eof() && is_bare_key_char(peek())) key += get();
    if (key.empty()) fail("expected a key");
    return key;
  }

  std::vector<std::string> parse_key_path() {
    std::vector<std::string> path;
    path.push_back(parse_key_segment());
    skip_inline_ws();
    while (!eof() && peek() == '.') {
      get();
      path.push_back(parse_key_segment());
      skip_inline_ws();
    }
    return path;
  }

  // Walks a dotted path creating tables; an array-of-tables segment resolves
  // to its most recent element, per TOML.
  TomlDoc* navigate(TomlDoc& root, const std::vector<std::string>& path, std::size_t upto) {
    TomlDoc* node = &root;
    for (std::size_t i = 0; i < upto; ++i) {
      TomlDoc& slot = (*node)[path[i]];
      if (slot.is_null()) slot = TomlDoc::object();
      if (slot.is_array()) {
        if (slot.empty()) fail("cannot navigate into empty array '" + path[i] + "'");
        node = &slot.back();
      } else if (slot.is_object()) {
        node = &slot;
      } else {
        fail("key '" + path[i] + "' is a value, not a table");
      }
    }
    return node;
  }

  TomlDoc* parse_header(TomlDoc& root) {
    get();  // '['
    bool array_of_tables = !eof() && peek() == '[';
    if (array_of_tables) get();
    auto path = parse_key_path();
    if (eof() || get() != ']') fail("unterminated table header");
    if (array_of_tables && (eof() || get() != ']')) fail("expected ']]'");

    TomlDoc* parent = navigate(root, path, path.size() - 1);
    TomlDoc& slot = (*parent)[path.back()];
    if (array_of_tables) {
      if (slot.is_null()) slot = TomlDoc::array();
      if (!slot.is_array()) fail("'" + path.back() + "' is already a non-array");
      slot.push_back(TomlDoc::object());
      return &slot.back();
    }
    if (slot.is_null()) slot = TomlDoc::object();
    if (!slot.is_object()) fail("'" + path.back() + "' is already a non-table");
    return &slot;
  }

  void parse_key_value(TomlDoc& table) {
    auto path = parse_key_path();
    skip_inline_ws();
    if (eof() || get() != '=') fail("expected '=' after key '" + path.back() + "'");
    skip_inline_ws();
    TomlDoc value = parse_value();
    TomlDoc* parent = &table;
    if (path.size() > 1) parent = navigate(table, path, path.size() - 1);
    if (parent->contains(path.back())) fail("duplicate key '" + path.back() + "'");
    (*parent)[path.back()] = std::move(value);
  }

  TomlDoc parse_value() {
    skip_inline_ws();
    if (eof()) fail("expected a value");
    char c = peek();
    if (c == '"' || c == '\'') return parse_string_value();
    if (c == '[') return parse_array();
    if (c == '{') return parse_inline_table();
    return parse_scalar();
  }

  TomlDoc parse_array() {
    get();  // '['
    TomlDoc arr = TomlDoc::array();
    for (;;) {
      skip_trivia();
      if (eof()) fail("unterminated array");
      if (peek() == ']') {
        get();
        return arr;
      }
      arr.push_back(parse_value());
      skip_trivia();
      if (eof()) fail("unterminated array");
      if (peek() == ',') {
        get();
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
  }

  TomlDoc parse_inline_table() {
    get();  // '{'
    TomlDoc obj = TomlDoc::object();
    skip_inline_ws();
    if (!eof() && peek() == '}') {
      get();
      return obj;
    }
    for (;;) {
      std::string key = parse_key_segment();
      skip_inline_ws();
      if (eof() || get() != '=') fail("expected '=' in inline table");
      obj[key] = parse_value();
      skip_inline_ws();
      if (eof()) fail("unterminated inline table");
      char c = get();
      if (c == '}') return obj;
      if (c != ',') fail("expected ',' or '}' in inline table");
      skip_inline_ws();
    }
  }

  TomlDoc parse_string_value() {
    char quote = peek();
    bool triple = src_.compare(pos_, 3, quote == '"' ? "\"\"\"" : "'''") == 0;
    if (triple) return quote == '"' ? parse_multiline_basic() : parse_multiline_literal();
    get();
    std::string out;
    if (quote == '\'') {
      while (!eof() && peek() != '\'') {
        if (peek() == '\n') fail("newline in literal string");
        out += get();
      }
      if (eof()) fail("unterminated literal string");
      get();
      return out;
    }
    while (!eof() && peek() != '"') {
      char c = get();
      if (c == '\n') fail("newline in basic string");
      if (c == '\\') out += parse_escape();
      else out += c;
    }
    if (eof()) fail("unterminated basic string");
    get();
    return out;
  }

  std::string parse_escape() {
    if (eof()) fail("dangling escape");
    char e = get();
    switch (e) {
      case 'n': return "\n";
      case 't': return "\t";
      case 'r': return "\r";
      case 'f': return "\f";
      case 'b': return "\b";
      case '"': return "\"";
      case '\\': return "\\";
      case 'u': return parse_unicode_escape(4);
      case 'U': return parse_unicode_escape(8);
      default: fail(std::string("unsupported escape \\") + e);
    }
  }

  std::string parse_unicode_escape(int digits) {
    std::uint32_t cp = 0;
    for (int i = 0; i < digits; ++i) {
      if (eof()) fail("truncated unicode escape");
      char c = get();
      cp <<= 4;
      if (c >= '0' && c <= '9') cp |= static_cast<std::uint32_t>(c - '0');
      else if (c >= 'a' && c <= 'f') cp |= static_cast<std::uint32_t>(c - 'a' + 10);
      else if (c >= 'A' && c <= 'F') cp |= static_cast<std::uint32_t>(c - 'A' + 10);
      else fail("bad unicode escape digit");
    }
    std::string out;
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
    return out;
  }

  TomlDoc parse_multiline_basic() {
    pos_ += 3;
    if (!eof() && peek() == '\n') get();  // trim the first newline
    else if (src_.compare(pos_, 2, "\r\n") == 0) { get(); get(); }
    std::string out;
    while (src_.compare(pos_, 3, "\"\"\"") != 0) {
      if (eof()) fail("unterminated multiline string");
      char c = get();
      if (c == '\\') {
        // Line-ending backslash eats the newline and following whitespace.
        if (!eof() && (peek() == '\n' || peek() == '\r' || peek() == ' ' || peek() == '\t')) {
          bool saw_newline = false;
          while (!eof() && (peek() == '\n' || peek() == '\r' || peek() == ' ' || peek() == '\t')) {
            if (peek() == '\n') saw_newline = true;
            get();
          }
          if (!saw_newline) fail("backslash must be at end of line");
        } else {
          out += parse_escape();
        }
      } else {
        out += c;
      }
    }
    pos_ += 3;
    return out;
  }

  TomlDoc parse_multiline_literal() {
    pos_ += 3;
    if (!eof() && peek() == '\n') get();
    std::string out;
    while (src_.compare(pos_, 3, "'''") != 0) {
      if (eof()) fail("unterminated multiline literal");
      out += get();
    }
    pos_ += 3;
    return out;
  }

  TomlDoc parse_scalar() {
    std::string tok;
    while (!eof()) {
      char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.' ||
          c == '_' || c == ':')
        tok += get();
      else
        break;
    }
    if (tok.empty()) fail("expected a value");
    if (tok == "true") return true;
    if (tok == "false") return false;

    std::string digits;
    for (char c : tok)
      if (c != '_') digits += c;
    bool looks_float = digits.find('.') != std::string::npos ||
                       digits.find('e') != std::string::npos ||
                       digits.find('E') != std::string::npos;
    if (!looks_float) {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
      if (ec == std::errc() && p == digits.data() + digits.size()) return v;
    }
    try {
      std::size_t used = 0;
      double d = std::stod(digits, &used);
      if (used == digits.size()) return d;
    } catch (...) {
    }
    fail("unsupported value '" + tok + "'");
  }

  std::string_view src_;
  std::string origin_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

}  // namespace detail

/// Parses TOML text. `origin` labels error messages (usually the file name).
inline TomlDoc parse_toml(std::string_view text, const std::string& origin = "<toml>") {
  return detail::TomlParser(text, origin).parse();
}

inline TomlDoc parse_toml_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Err::Config, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_toml(buf.str(), path);
}

}  // namespace sg

#pragma once

// Relaxed loader for model-emitted structured values.
//
// Accepts strict JSON, Python-literal style containers (single-quoted strings,
// True/False/None, trailing commas, leading '+') and either form wrapped in a
// triple-backtick code fence. Ellipsis placeholders are rejected with a
// dedicated failure kind. The accepted language is written down in
// docs/relaxed_grammar.md.

#include <cctype>
#include <charconv>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>

#include "json.hpp"

namespace toolplay {

struct LoadFailure {
  enum class Kind { syntax, placeholder };
  Kind kind = Kind::syntax;
  std::size_t offset = 0;  // byte offset into the original input
  std::string message;
};

struct LoadResult {
  nlohmann::json value;
  std::optional<LoadFailure> failure;

  bool ok() const { return !failure.has_value(); }
  bool placeholder() const { return failure && failure->kind == LoadFailure::Kind::placeholder; }
};

namespace detail {

inline bool is_json_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

inline std::string_view trim_view(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_json_space(s[b])) ++b;
  while (e > b && is_json_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

inline bool is_placeholder_text(std::string_view s) {
  s = trim_view(s);
  return s == "..." || s == "\xE2\x80\xA6";  // "..." or U+2026
}

inline void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Length of the valid UTF-8 sequence starting at s[i], or 0 if invalid.
inline std::size_t utf8_sequence_length(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) {
    return i + k < s.size() && (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
  };
  if (b0 < 0x80) return 1;
  if (b0 >= 0xC2 && b0 <= 0xDF) return cont(1) ? 2 : 0;
  if (b0 >= 0xE0 && b0 <= 0xEF) {
    if (!cont(1) || !cont(2)) return 0;
    const auto b1 = static_cast<unsigned char>(s[i + 1]);
    if (b0 == 0xE0 && b1 < 0xA0) return 0;  // overlong
    if (b0 == 0xED && b1 > 0x9F) return 0;  // surrogates
    return 3;
  }
  if (b0 >= 0xF0 && b0 <= 0xF4) {
    if (!cont(1) || !cont(2) || !cont(3)) return 0;
    const auto b1 = static_cast<unsigned char>(s[i + 1]);
    if (b0 == 0xF0 && b1 < 0x90) return 0;
    if (b0 == 0xF4 && b1 > 0x8F) return 0;
    return 4;
  }
  return 0;
}

class RelaxedParser {
 public:
  RelaxedParser(std::string_view text, std::size_t base) : s_(text), base_(base) {}

  LoadResult run() {
    LoadResult r;
    skip_ws();
    if (!parse_value(r.value, 0)) {
      r.value = nullptr;
      r.failure = failure_;
      return r;
    }
    skip_ws();
    if (pos_ != s_.size()) {
      r.value = nullptr;
      r.failure = LoadFailure{LoadFailure::Kind::syntax, base_ + pos_, "trailing characters after value"};
    }
    return r;
  }

 private:
  static constexpr int kMaxDepth = 256;

  bool fail(std::string msg, LoadFailure::Kind kind = LoadFailure::Kind::syntax) {
    failure_ = LoadFailure{kind, base_ + pos_, std::move(msg)};
    return false;
  }

  void skip_ws() {
    while (pos_ < s_.size() && is_json_space(s_[pos_])) ++pos_;
  }

  bool at_ellipsis() const {
    return s_.substr(pos_).starts_with("...") || s_.substr(pos_).starts_with("\xE2\x80\xA6");
  }

  bool parse_value(nlohmann::json& out, int depth) {
    if (depth > kMaxDepth) return fail("nesting too deep");
    if (pos_ >= s_.size()) return fail("unexpected end of input");
    if (at_ellipsis()) return fail("ellipsis placeholder", LoadFailure::Kind::placeholder);
    const char c = s_[pos_];
    if (c == '{') return parse_object(out, depth + 1);
    if (c == '[') return parse_array(out, depth + 1);
    if (c == '"' || c == '\'') {
      std::string str;
      const std::size_t start = pos_;
      if (!parse_string(str)) return false;
      if (is_placeholder_text(str)) {
        pos_ = start;
        return fail("ellipsis placeholder string", LoadFailure::Kind::placeholder);
      }
      out = std::move(str);
      return true;
    }
    if (c == '-' || c == '+' || (c >= '0' && c <= '9')) return parse_number(out);
    return parse_literal(out);
  }

  bool parse_literal(nlohmann::json& out) {
    static constexpr std::pair<std::string_view, int> kWords[] = {
        {"true", 1}, {"false", 0}, {"null", -1}, {"True", 1}, {"False", 0}, {"None", -1}};
    for (const auto& [word, v] : kWords) {
      if (s_.substr(pos_).starts_with(word)) {
        const std::size_t end = pos_ + word.size();
        if (end < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[end])) || s_[end] == '_')) continue;
        pos_ = end;
        if (v < 0) out = nullptr;
        else out = (v == 1);
        return true;
      }
    }
    return fail("unexpected token");
  }

  bool parse_number(nlohmann::json& out) {
    const std::size_t start = pos_;
    if (s_[pos_] == '+' || s_[pos_] == '-') ++pos_;
    const std::size_t int_start = pos_;
    if (pos_ >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_]))) return fail("malformed number");
    if (s_[pos_] == '0') {
      ++pos_;
    } else {
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool is_float = false;
    if (pos_ < s_.size() && s_[pos_] == '.') {
      is_float = true;
      ++pos_;
      if (pos_ >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_]))) return fail("malformed fraction");
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      is_float = true;
      ++pos_;
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
      if (pos_ >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_]))) return fail("malformed exponent");
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    if (pos_ < s_.size() && (std::isalpha(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      return fail("malformed number");

    const bool negative = s_[start] == '-';
    const std::string_view digits = s_.substr(int_start, pos_ - int_start);
    if (!is_float) {
      if (negative) {
        std::int64_t v = 0;
        const std::string_view signed_text = s_.substr(start, pos_ - start);
        auto [p, ec] = std::from_chars(signed_text.data(), signed_text.data() + signed_text.size(), v);
        if (ec == std::errc() && p == signed_text.data() + signed_text.size()) {
          out = v;
          return true;
        }
      } else {
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
        if (ec == std::errc() && p == digits.data() + digits.size()) {
          // Match nlohmann: non-negative integers that fit int64 are signed.
          if (v <= static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
            out = static_cast<std::int64_t>(v);
          else
            out = v;
          return true;
        }
      }
    }
    const std::string text(s_.substr(s_[start] == '+' ? start + 1 : start, pos_ - (s_[start] == '+' ? start + 1 : start)));
    double d = 0.0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), d);
    if (ec == std::errc::result_out_of_range || p != text.data() + text.size()) {
      pos_ = start;
      return fail("number out of range");
    }
    out = d;
    return true;
  }

  bool parse_hex4(std::uint32_t& cp) {
    if (pos_ + 4 > s_.size()) return fail("truncated unicode escape");
    cp = 0;
    for (int i = 0; i < 4; ++i) {
      const char h = s_[pos_++];
      cp <<= 4;
      if (h >= '0' && h <= '9') cp |= static_cast<std::uint32_t>(h - '0');
      else if (h >= 'a' && h <= 'f') cp |= static_cast<std::uint32_t>(h - 'a' + 10);
      else if (h >= 'A' && h <= 'F') cp |= static_cast<std::uint32_t>(h - 'A' + 10);
      else return fail("bad hex digit in unicode escape");
    }
    return true;
  }

  bool parse_string(std::string& out) {
    const char quote = s_[pos_++];
    while (true) {
      if (pos_ >= s_.size()) return fail("unterminated string");
      const char c = s_[pos_];
      if (c == quote) {
        ++pos_;
        return true;
      }
      if (c == '\\') {
        ++pos_;
        if (pos_ >= s_.size()) return fail("unterminated escape");
        const char e = s_[pos_++];
        switch (e) {
          case '"': out.push_back('"'); break;
          case '\'': out.push_back('\''); break;
          case '\\': out.push_back('\\'); break;
          case '/': out.push_back('/'); break;
          case 'b': out.push_back('\b'); break;
          case 'f': out.push_back('\f'); break;
          case 'n': out.push_back('\n'); break;
          case 'r': out.push_back('\r'); break;
          case 't': out.push_back('\t'); break;
          case 'u': {
            std::uint32_t cp = 0;
            if (!parse_hex4(cp)) return false;
            if (cp >= 0xD800 && cp <= 0xDBFF) {
              if (!s_.substr(pos_).starts_with("\\u")) return fail("unpaired surrogate");
              pos_ += 2;
              std::uint32_t lo = 0;
              if (!parse_hex4(lo)) return false;
              if (lo < 0xDC00 || lo > 0xDFFF) return fail("unpaired surrogate");
              cp = 0x10000 + ((cp - 0xD800) << 10) + (lo - 0xDC00);
            } else if (cp >= 0xDC00 && cp <= 0xDFFF) {
              return fail("unpaired surrogate");
            }
            append_utf8(out, cp);
            break;
          }
          default:
            // Python keeps unknown escapes verbatim.
            out.push_back('\\');
            out.push_back(e);
        }
        continue;
      }
      const std::size_t len = utf8_sequence_length(s_, pos_);
      if (len == 0) return fail("invalid UTF-8 in string");
      out.append(s_.substr(pos_, len));
      pos_ += len;
    }
  }

  bool parse_array(nlohmann::json& out, int depth) {
    ++pos_;  // '['
    out = nlohmann::json::array();
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == ']') {
      ++pos_;
      return true;
    }
    while (true) {
      skip_ws();
      nlohmann::json item;
      if (!parse_value(item, depth)) return false;
      out.push_back(std::move(item));
      skip_ws();
      if (pos_ >= s_.size()) return fail("unterminated array");
      if (s_[pos_] == ',') {
        ++pos_;
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ']') {  // trailing comma
          ++pos_;
          return true;
        }
        continue;
      }
      if (s_[pos_] == ']') {
        ++pos_;
        return true;
      }
      return fail("expected ',' or ']'");
    }
  }

  bool parse_object(nlohmann::json& out, int depth) {
    ++pos_;  // '{'
    out = nlohmann::json::object();
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == '}') {
      ++pos_;
      return true;
    }
    while (true) {
      skip_ws();
      if (pos_ >= s_.size()) return fail("unterminated object");
      if (at_ellipsis()) return fail("ellipsis placeholder", LoadFailure::Kind::placeholder);
      if (s_[pos_] != '"' && s_[pos_] != '\'') return fail("expected string key");
      std::string key;
      if (!parse_string(key)) return false;
      skip_ws();
      if (pos_ >= s_.size() || s_[pos_] != ':') return fail("expected ':'");
      ++pos_;
      skip_ws();
      nlohmann::json v;
      if (!parse_value(v, depth)) return false;
      out[key] = std::move(v);  // duplicate keys: last wins
      skip_ws();
      if (pos_ >= s_.size()) return fail("unterminated object");
      if (s_[pos_] == ',') {
        ++pos_;
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == '}') {
          ++pos_;
          return true;
        }
        continue;
      }
      if (s_[pos_] == '}') {
        ++pos_;
        return true;
      }
      return fail("expected ',' or '}'");
    }
  }

  std::string_view s_;
  std::size_t base_;
  std::size_t pos_ = 0;
  LoadFailure failure_;
};

// Strips a leading ```info line and a trailing ``` fence. Returns the inner
// view and its byte offset within `text`.
inline std::pair<std::string_view, std::size_t> strip_code_fence(std::string_view text) {
  std::size_t b = 0, e = text.size();
  while (b < e && is_json_space(text[b])) ++b;
  while (e > b && is_json_space(text[e - 1])) --e;
  std::string_view t = text.substr(b, e - b);
  if (!t.starts_with("```")) return {text, 0};
  const std::size_t nl = t.find('\n');
  if (nl == std::string_view::npos) return {text, 0};
  std::string_view inner = t.substr(nl + 1);
  std::size_t offset = b + nl + 1;
  std::string_view tail = trim_view(inner);
  if (tail.ends_with("```")) {
    const std::size_t cut = inner.rfind("```");
    inner = inner.substr(0, cut);
  }
  return {inner, offset};
}

}  // namespace detail

/// Parses `text` under the relaxed grammar.
inline LoadResult load_relaxed(std::string_view text) {
  auto [inner, offset] = detail::strip_code_fence(text);
  return detail::RelaxedParser(inner, offset).run();
}

}  // namespace toolplay

#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>

#include "json.hpp"

namespace toolplay {

/// Digit strings longer than this are identifiers and never coerced to numbers.
inline constexpr std::size_t kIdentifierDigits = 15;

namespace detail {

inline bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c >= 0x80;
}

inline char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

}  // namespace detail

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && detail::is_ascii_space(s[b])) ++b;
  while (e > b && detail::is_ascii_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

/// Trims and collapses internal whitespace runs to a single space.
inline std::string normalize_whitespace(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    if (detail::is_ascii_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

/// Canonical decimal text of a double: integral values print as exact
/// integers ("7", never "7.0"), everything else uses the shortest
/// round-trip form.
inline std::string canonical_decimal(double d) {
  if (d == 0.0) return "0";
  if (std::trunc(d) == d && std::fabs(d) < 1e21) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.0f", d);
    return buf;
  }
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, p);
}

inline std::optional<std::string> canonical_number(const nlohmann::json& v) {
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (!std::isfinite(d)) return std::nullopt;
    return canonical_decimal(d);
  }
  return std::nullopt;
}

/// True for strings like "12345678901234567890": optional sign, then more
/// than kIdentifierDigits digits and nothing else.
inline bool is_long_numeric_string(std::string_view raw) {
  const std::string s = trim(raw);
  std::size_t i = (!s.empty() && (s[0] == '+' || s[0] == '-')) ? 1 : 0;
  if (s.size() - i <= kIdentifierDigits) return false;
  for (; i < s.size(); ++i)
    if (s[i] < '0' || s[i] > '9') return false;
  return true;
}

/// Canonical decimal of a numeric-looking string ("  7.50 " -> "7.5").
inline std::optional<std::string> coerce_numeric_string(std::string_view raw) {
  const std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  std::size_t i = 0;
  if (s[i] == '+' || s[i] == '-') ++i;
  const std::size_t digits_start = i;
  while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
  if (i == digits_start) return std::nullopt;
  if (i < s.size() && s[i] == '.') {
    ++i;
    const std::size_t frac = i;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
    if (i == frac) return std::nullopt;
  }
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    ++i;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
    const std::size_t exp = i;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
    if (i == exp) return std::nullopt;
  }
  if (i != s.size()) return std::nullopt;
  const char* first = s.data() + (s[0] == '+' ? 1 : 0);
  double d = 0.0;
  auto [p, ec] = std::from_chars(first, s.data() + s.size(), d);
  if (ec != std::errc() || !std::isfinite(d)) return std::nullopt;
  return canonical_decimal(d);
}

namespace detail {

inline std::optional<std::string> numeric_form(const nlohmann::json& v) {
  if (v.is_number()) return canonical_number(v);
  if (v.is_string()) return coerce_numeric_string(v.get_ref<const std::string&>());
  return std::nullopt;
}

inline std::string identifier_form(const nlohmann::json& v) {
  if (v.is_string()) return normalize_whitespace(v.get_ref<const std::string&>());
  if (auto n = canonical_number(v)) return *n;
  return v.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

}  // namespace detail

/// Robust comparator for primitive argument values.
///
/// Order of rules: exact equality of same-kind non-numbers; the identifier
/// rule for long digit strings; numeric coercion (exact on canonical
/// decimals, no epsilon); whitespace-normalized string equality; canonical
/// serialized form.
inline bool values_equal(const nlohmann::json& a, const nlohmann::json& b) {
  if (!a.is_number() && !b.is_number() && a.type() == b.type() && a == b) return true;

  const bool a_ident = a.is_string() && is_long_numeric_string(a.get_ref<const std::string&>());
  const bool b_ident = b.is_string() && is_long_numeric_string(b.get_ref<const std::string&>());
  if (a_ident || b_ident) return detail::identifier_form(a) == detail::identifier_form(b);

  const auto na = detail::numeric_form(a);
  const auto nb = detail::numeric_form(b);
  if (na && nb) return *na == *nb;

  if (a.is_string() && b.is_string())
    return normalize_whitespace(a.get_ref<const std::string&>()) ==
           normalize_whitespace(b.get_ref<const std::string&>());

  const auto dump = [](const nlohmann::json& v) {
    return v.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
  };
  return dump(a) == dump(b);
}

/// Case-insensitive (ASCII letters) search for `needle` in `haystack` where
/// each needle edge that is a word character must not touch another word
/// character in the haystack.
inline bool contains_word(std::string_view haystack, std::string_view needle) {
  if (needle.empty() || needle.size() > haystack.size()) return false;
  const bool check_left = detail::is_word_byte(static_cast<unsigned char>(needle.front()));
  const bool check_right = detail::is_word_byte(static_cast<unsigned char>(needle.back()));
  for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    bool match = true;
    for (std::size_t k = 0; k < needle.size(); ++k) {
      if (detail::ascii_lower(haystack[i + k]) != detail::ascii_lower(needle[k])) {
        match = false;
        break;
      }
    }
    if (!match) continue;
    if (check_left && i > 0 && detail::is_word_byte(static_cast<unsigned char>(haystack[i - 1]))) continue;
    const std::size_t end = i + needle.size();
    if (check_right && end < haystack.size() && detail::is_word_byte(static_cast<unsigned char>(haystack[end])))
      continue;
    return true;
  }
  return false;
}

/// Whether an argument value is grounded in the question text. Booleans and
/// nulls are exempt; empty strings never ground.
inline bool value_grounded(const nlohmann::json& value, std::string_view question) {
  if (value.is_boolean() || value.is_null()) return true;
  if (value.is_string()) return contains_word(question, trim(value.get_ref<const std::string&>()));
  if (auto n = canonical_number(value)) return contains_word(question, *n);
  return false;
}

}  // namespace toolplay

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "opentie/error.hpp"
#include "opentie/geometry.hpp"
#include "opentie/image.hpp"

namespace opentie {

/// One "key = value" line of a flat config file.
struct KeyValue {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/// '#' starts a comment; blank lines are skipped; duplicate keys are rejected.
inline std::vector<KeyValue> parse_key_values(std::string_view text, const std::string& module) {
  std::vector<KeyValue> out;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(module, line_no, "expected 'key = value'");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string value(detail::trim(line.substr(eq + 1)));
    if (key.empty()) throw ParseError(module, line_no, "empty key");
    if (value.empty()) throw ParseError(module, line_no, "empty value for '" + key + "'");
    if (!seen.insert(key).second) throw ParseError(module, line_no, "duplicate key '" + key + "'");
    out.push_back({key, value, line_no});
  }
  return out;
}

/// Value conversions; each throws InvalidArgument naming the key on failure.
namespace kv {

inline Error bad_value(const std::string& key, const std::string& value, const char* expected) {
  return Error("config", ErrorCode::InvalidArgument,
               "'" + key + "' = '" + value + "' is not " + expected);
}

inline double to_real(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size() || !std::isfinite(v)) {
    throw bad_value(key, value, "a finite real");
  }
  return v;
}

inline long long to_integer(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const long long v = std::strtoll(value.c_str(), &end, 10);
  if (value.empty() || end != value.c_str() + value.size()) throw bad_value(key, value, "an integer");
  return v;
}

inline int to_int(const std::string& key, const std::string& value) {
  const long long v = to_integer(key, value);
  if (v < -2147483647LL || v > 2147483647LL) throw bad_value(key, value, "a 32-bit integer");
  return static_cast<int>(v);
}

inline std::uint64_t to_u64(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (value.empty() || value[0] == '-' || end != value.c_str() + value.size()) {
    throw bad_value(key, value, "an unsigned integer");
  }
  return v;
}

inline bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw bad_value(key, value, "true/false");
}

/// Comma-separated reals, exactly `n` of them.
inline std::vector<double> to_reals(const std::string& key, const std::string& value, std::size_t n) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= value.size()) {
    const auto comma = value.find(',', pos);
    const std::string tok(detail::trim(std::string_view(value).substr(
        pos, comma == std::string::npos ? std::string::npos : comma - pos)));
    out.push_back(to_real(key, tok));
    pos = comma == std::string::npos ? value.size() + 1 : comma + 1;
  }
  if (out.size() != n) throw bad_value(key, value, (std::to_string(n) + " comma-separated reals").c_str());
  return out;
}

inline Vec3 to_vec3(const std::string& key, const std::string& value) {
  const auto r = to_reals(key, value, 3);
  return {r[0], r[1], r[2]};
}

/// Round-trip exact text for reals.
inline std::string real(double v) { return format_real(v, 17); }

inline std::string vec3(const Vec3& v) { return real(v.x()) + "," + real(v.y()) + "," + real(v.z()); }

}  // namespace kv

}  // namespace opentie

#pragma once

// Flat key=value text used for configs and run manifests. '#' starts a
// comment line; later keys override earlier ones.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "rnmf/csv.hpp"
#include "rnmf/errors.hpp"

namespace rnmf {

using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_kv(std::string_view text) {
  KeyValues out;
  std::size_t lineno = 0;
  for (auto line : detail::split(text, '\n')) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw FormatError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    out[std::string(detail::trim(line.substr(0, eq)))] =
        std::string(detail::trim(line.substr(eq + 1)));
  }
  return out;
}

inline KeyValues read_kv(const std::string& path) { return parse_kv(read_text_file(path)); }

inline double kv_double(const std::string& key, const std::string& value) {
  return detail::parse_double(value, "config key '" + key + "'");
}

inline std::uint64_t kv_u64(const std::string& key, const std::string& value) {
  return detail::parse_count(value, "config key '" + key + "'");
}

inline bool kv_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw FormatError("config key '" + key + "': expected a boolean, got '" + value + "'");
}

inline std::vector<double> kv_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (auto tok : detail::split(value, ',')) out.push_back(kv_double(key, std::string(tok)));
  return out;
}

inline std::vector<std::uint64_t> kv_u64_list(const std::string& key, const std::string& value) {
  std::vector<std::uint64_t> out;
  for (auto tok : detail::split(value, ',')) out.push_back(kv_u64(key, std::string(tok)));
  return out;
}

}  // namespace rnmf

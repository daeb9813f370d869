#pragma once

// Strict field accessors for JSON records. Each throws std::invalid_argument
// naming the field so the loader can attach file/line context.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "menucsi/jsonl.hpp"

namespace menucsi::detail {

inline const ojson& field(const ojson& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) {
    throw std::invalid_argument(std::string("missing field '") + name + "'");
  }
  return *it;
}

inline std::string get_string(const ojson& j, const char* name) {
  const ojson& v = field(j, name);
  if (!v.is_string()) throw std::invalid_argument(std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

inline std::optional<std::string> get_optional_string(const ojson& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw std::invalid_argument(std::string("field '") + name + "' must be a string");
  return it->get<std::string>();
}

inline double get_number(const ojson& j, const char* name) {
  const ojson& v = field(j, name);
  if (!v.is_number()) throw std::invalid_argument(std::string("field '") + name + "' must be a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) throw std::invalid_argument(std::string("field '") + name + "' must be finite");
  return d;
}

inline std::optional<double> get_optional_number(const ojson& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return get_number(j, name);
}

inline long long get_integer(const ojson& j, const char* name) {
  const ojson& v = field(j, name);
  if (!v.is_number_integer()) throw std::invalid_argument(std::string("field '") + name + "' must be an integer");
  return v.get<long long>();
}

inline std::size_t get_index(const ojson& j, const char* name) {
  long long v = get_integer(j, name);
  if (v < 0) throw std::invalid_argument(std::string("field '") + name + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

inline bool get_bool(const ojson& j, const char* name) {
  const ojson& v = field(j, name);
  if (!v.is_boolean()) throw std::invalid_argument(std::string("field '") + name + "' must be a boolean");
  return v.get<bool>();
}

inline const ojson& get_array(const ojson& j, const char* name) {
  const ojson& v = field(j, name);
  if (!v.is_array()) throw std::invalid_argument(std::string("field '") + name + "' must be an array");
  return v;
}

}  // namespace menucsi::detail

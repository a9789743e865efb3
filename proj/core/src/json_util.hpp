// Internal JSON helpers shared by the config readers.
#ifndef PHASECHANGE_SRC_JSON_UTIL_HPP_
#define PHASECHANGE_SRC_JSON_UTIL_HPP_

#include <initializer_list>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "phasechange/env_config.hpp"

namespace phasechange::detail {

using Json = nlohmann::json;

inline void RejectUnknownKeys(const Json& object,
                              std::initializer_list<std::string_view> allowed,
                              std::string_view where) {
  if (!object.is_object()) {
    throw std::invalid_argument(std::string(where) + ": expected an object");
  }
  const std::set<std::string_view> known(allowed);
  for (const auto& [key, value] : object.items()) {
    if (!known.contains(key)) {
      throw std::invalid_argument(std::string(where) + ": unknown key '" + key +
                                  "'");
    }
  }
}

template <typename T>
T Require(const Json& object, const char* key, std::string_view where) {
  if (!object.contains(key)) {
    throw std::invalid_argument(std::string(where) + ": missing key '" + key +
                                "'");
  }
  try {
    return object.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string(where) + ": bad value for '" + key +
                                "': " + e.what());
  }
}

template <typename T>
T Optional(const Json& object, const char* key, T fallback,
           std::string_view where) {
  if (!object.contains(key)) return fallback;
  return Require<T>(object, key, where);
}

env::EnvironmentConfig EnvironmentConfigFromJson(const Json& json);

}  // namespace phasechange::detail

#endif  // PHASECHANGE_SRC_JSON_UTIL_HPP_

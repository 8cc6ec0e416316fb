#pragma once

// Field access helpers for the JSON config files.

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "unitor/config_error.hpp"
#include "unitor/mailsim.hpp"

namespace unitor::jsonutil {

using nlohmann::json;

inline const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing field \"" + key + "\"");
  return j.at(key);
}

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return require(j, key, where).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": field \"" + key + "\" has the wrong type");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  return get<T>(j, key, where);
}

inline mail::Credentials credentials(const json& j, const std::string& where) {
  const auto& m = require(j, "mailbox", where);
  return {get<std::string>(m, "address", where + ".mailbox"), get<std::string>(m, "password", where + ".mailbox")};
}

inline json to_json(const mail::Credentials& c) { return {{"address", c.address}, {"password", c.password}}; }

inline mail::Endpoint endpoint(const json& j, const std::string& where) {
  mail::Endpoint ep;
  if (!j.contains("broker")) return ep;
  const auto& b = j.at("broker");
  ep.host = get_or<std::string>(b, "host", ep.host, where + ".broker");
  ep.smtp_port = get_or<std::uint16_t>(b, "smtp_port", ep.smtp_port, where + ".broker");
  ep.pop3_port = get_or<std::uint16_t>(b, "pop3_port", ep.pop3_port, where + ".broker");
  return ep;
}

inline json to_json(const mail::Endpoint& ep) {
  return {{"host", ep.host}, {"smtp_port", ep.smtp_port}, {"pop3_port", ep.pop3_port}};
}

inline std::chrono::milliseconds millis_or(const json& j, const char* key, std::chrono::milliseconds fallback,
                                           const std::string& where) {
  const auto v = get_or<std::int64_t>(j, key, fallback.count(), where);
  if (v <= 0) throw ConfigError(where + ": field \"" + key + "\" must be positive");
  return std::chrono::milliseconds(v);
}

/// Optional path field, resolved against `base` when relative.
inline std::optional<std::filesystem::path> path_or_none(const json& j, const char* key,
                                                         const std::filesystem::path& base, const std::string& where) {
  const auto s = get_or<std::string>(j, key, "", where);
  if (s.empty()) return std::nullopt;
  std::filesystem::path p(s);
  return p.is_relative() && !base.empty() ? base / p : p;
}

inline json read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace unitor::jsonutil

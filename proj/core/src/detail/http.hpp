#pragma once

#include <chrono>
#include <string>

#include <nlohmann/json.hpp>

namespace spcgen::detail {

/// Reads the API key from `env_name`. Throws Error(kAuth) when unset/empty.
std::string api_key_from_env(const std::string& env_name);

/// POSTs JSON to base_url + suffix with bearer auth and returns the parsed
/// response. 401/403 raise Error(kAuth), timeouts Error(kTimeout), other
/// failures ProviderError (status 0 for transport errors).
nlohmann::json post_json(const std::string& base_url, const std::string& suffix,
                         const std::string& api_key, const nlohmann::json& body,
                         std::chrono::milliseconds timeout);

}  // namespace spcgen::detail

#include "detail/http.hpp"

#include <httplib.h>

#include <cstdlib>

#include "spcgen/error.hpp"

namespace spcgen::detail {
namespace {

constexpr std::size_t kExcerptBytes = 300;

struct SplitUrl {
  std::string origin;
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(Errc::kInvalidArgument, "endpoint '" + url + "' is not a URL");
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? std::string() : url.substr(path_start);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

}  // namespace

std::string api_key_from_env(const std::string& env_name) {
  if (env_name.empty()) throw Error(Errc::kAuth, "no API key variable configured");
  const char* value = std::getenv(env_name.c_str());
  if (!value || !*value) throw Error(Errc::kAuth, "environment variable " + env_name + " is not set");
  return value;
}

nlohmann::json post_json(const std::string& base_url, const std::string& suffix,
                         const std::string& api_key, const nlohmann::json& body,
                         std::chrono::milliseconds timeout) {
  const auto url = split_url(base_url);
  std::string path = url.path;
  if (path.size() < suffix.size() || path.compare(path.size() - suffix.size(), suffix.size(), suffix) != 0) {
    path += suffix;
  }

  httplib::Client client(url.origin);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());
  client.set_bearer_token_auth(api_key);

  auto res = client.Post(path, body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::Read || err == httplib::Error::Write ||
        err == httplib::Error::ConnectionTimeout) {
      throw Error(Errc::kTimeout, "request to " + url.origin + path + " timed out (" +
                                      httplib::to_string(err) + ")");
    }
    throw ProviderError(0, httplib::to_string(err));
  }
  if (res->status == 401 || res->status == 403) {
    throw Error(Errc::kAuth, "provider rejected credentials (HTTP " + std::to_string(res->status) + ")");
  }
  if (res->status < 200 || res->status >= 300) {
    throw ProviderError(res->status, res->body.substr(0, kExcerptBytes));
  }
  auto parsed = nlohmann::json::parse(res->body, nullptr, false);
  if (parsed.is_discarded()) throw ProviderError(res->status, res->body.substr(0, kExcerptBytes));
  return parsed;
}

}  // namespace spcgen::detail

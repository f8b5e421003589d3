#include "spcgen/providers.hpp"

#include <fstream>
#include <iterator>

#include "detail/http.hpp"
#include "spcgen/error.hpp"

namespace spcgen {

HttpChatClient::HttpChatClient(ProviderConfig config)
    : config_(std::move(config)), api_key_(detail::api_key_from_env(config_.api_key_env)) {
  check_config(config_);
}

nlohmann::json HttpChatClient::request_body(std::string_view prompt,
                                            std::span<const ReferenceDoc> attachments) const {
  nlohmann::json message{{"role", "user"}};
  bool any_file = false;
  for (const auto& doc : attachments) any_file = any_file || doc.is_attachment();
  if (!any_file) {
    message["content"] = std::string(prompt);
  } else {
    auto parts = nlohmann::json::array();
    parts.push_back({{"type", "text"}, {"text", std::string(prompt)}});
    for (const auto& doc : attachments) {
      if (!doc.is_attachment()) continue;
      parts.push_back({{"type", "file"}, {"file", {{"file_id", *doc.provider_file_id}}}});
    }
    message["content"] = std::move(parts);
  }
  return {{"model", config_.model_id},
          {"temperature", config_.temperature},
          {"messages", nlohmann::json::array({message})}};
}

std::string HttpChatClient::complete(std::string_view prompt,
                                     std::span<const ReferenceDoc> attachments,
                                     const CallContext&) {
  const auto response = detail::post_json(config_.endpoint_url, "/chat/completions", api_key_,
                                          request_body(prompt, attachments),
                                          config_.request_timeout);
  const auto excerpt = response.dump().substr(0, 300);
  if (!response.contains("choices") || !response["choices"].is_array() || response["choices"].empty()) {
    throw ProviderError(200, excerpt);
  }
  const auto& msg = response["choices"][0].value("message", nlohmann::json::object());
  const auto content = msg.value("content", nlohmann::json());
  if (content.is_string()) return content.get<std::string>();
  if (content.is_array()) {
    std::string text;
    for (const auto& part : content) {
      if (part.is_object() && part.value("type", "") == "text") text += part.value("text", "");
    }
    return text;
  }
  throw ProviderError(200, excerpt);
}

MockChatClient::MockChatClient(nlohmann::json script, std::filesystem::path base_dir)
    : script_(std::move(script)), base_dir_(std::move(base_dir)) {
  auto check_steps = [](const nlohmann::json& steps, const std::string& where) {
    if (!steps.is_array() || steps.empty()) {
      throw Error(Errc::kInvalidArgument, "mock script " + where + " must be a non-empty list");
    }
    for (const auto& step : steps) {
      if (!step.is_object() ||
          (!step.contains("respond") && !step.contains("respond_file") && !step.contains("fail"))) {
        throw Error(Errc::kInvalidArgument,
                    "mock step in " + where + " needs respond, respond_file, or fail");
      }
    }
  };
  if (script_.is_array()) {
    check_steps(script_, "root");
  } else if (script_.is_object()) {
    for (const auto& [stream, steps] : script_.items()) check_steps(steps, "stream '" + stream + "'");
  } else {
    throw Error(Errc::kInvalidArgument, "mock script must be a list or an object of lists");
  }
}

MockChatClient MockChatClient::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open mock script '" + path.string() + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto json = nlohmann::json::parse(text, nullptr, false);
  if (json.is_discarded()) throw Error(Errc::kInvalidArgument, "mock script '" + path.string() + "' is not JSON");
  return MockChatClient(std::move(json), path.parent_path());
}

const nlohmann::json& MockChatClient::steps_for(const std::string& stream) const {
  if (script_.is_array()) return script_;
  if (auto it = script_.find(stream); it != script_.end()) return *it;
  if (auto it = script_.find("default"); it != script_.end()) return *it;
  throw Error(Errc::kInvalidArgument, "mock script has no steps for stream '" + stream + "'");
}

std::string MockChatClient::complete(std::string_view prompt, std::span<const ReferenceDoc>,
                                     const CallContext& context) {
  nlohmann::json step;
  {
    std::lock_guard lock(mutex_);
    ++calls_;
    prompts_.emplace_back(prompt);
    const std::string key = script_.is_array() || !script_.contains(context.stream)
                                ? std::string("default")
                                : context.stream;
    const auto& steps = steps_for(context.stream);
    auto& cursor = cursors_[key];
    step = steps[std::min(cursor, steps.size() - 1)];
    ++cursor;
  }
  if (step.contains("fail")) {
    const auto& fail = step["fail"];
    if (fail.is_number_integer()) {
      throw ProviderError(fail.get<int>(), step.value("body", std::string("scripted failure")));
    }
    const std::string kind = fail.is_string() ? fail.get<std::string>() : "";
    if (kind == "timeout") throw Error(Errc::kTimeout, "scripted timeout");
    if (kind == "auth") throw Error(Errc::kAuth, "scripted authentication failure");
    throw Error(Errc::kInvalidArgument, "unknown scripted failure '" + fail.dump() + "'");
  }
  if (step.contains("respond_file")) {
    const auto path = base_dir_ / step["respond_file"].get<std::string>();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::kIo, "cannot open scripted response '" + path.string() + "'");
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  }
  return step["respond"].get<std::string>();
}

std::size_t MockChatClient::call_count() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

std::size_t MockChatClient::call_count(const std::string& stream) const {
  std::lock_guard lock(mutex_);
  auto it = cursors_.find(stream);
  return it == cursors_.end() ? 0 : it->second;
}

std::vector<std::string> MockChatClient::prompts() const {
  std::lock_guard lock(mutex_);
  return prompts_;
}

}  // namespace spcgen

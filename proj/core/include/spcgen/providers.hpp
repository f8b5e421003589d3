#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spcgen/gateway.hpp"

namespace spcgen {

/// Chat-completions client (POST {endpoint}/chat/completions, bearer auth).
class HttpChatClient : public ChatClient {
 public:
  /// Throws Error(kAuth) when the key variable is unset or empty.
  explicit HttpChatClient(ProviderConfig config);

  std::string complete(std::string_view prompt, std::span<const ReferenceDoc> attachments,
                       const CallContext& context) override;

  /// Request body sent for a prompt; exposed for inspection.
  nlohmann::json request_body(std::string_view prompt,
                              std::span<const ReferenceDoc> attachments) const;

 private:
  ProviderConfig config_;
  std::string api_key_;
};

/// Offline client replaying a script. The script is either a list of steps
/// or an object mapping stream names to lists (with "default" as fallback):
///
///   [{"respond": "text"}, {"respond_file": "out.tex"}, {"fail": 500},
///    {"fail": "timeout"}, {"fail": "auth"}]
///
/// Each stream advances its own cursor; the last step repeats once the list
/// is exhausted.
class MockChatClient : public ChatClient {
 public:
  explicit MockChatClient(nlohmann::json script, std::filesystem::path base_dir = {});
  static MockChatClient from_file(const std::filesystem::path& path);

  std::string complete(std::string_view prompt, std::span<const ReferenceDoc> attachments,
                       const CallContext& context) override;

  std::size_t call_count() const;
  std::size_t call_count(const std::string& stream) const;
  /// Prompts received, in call order.
  std::vector<std::string> prompts() const;

 private:
  const nlohmann::json& steps_for(const std::string& stream) const;

  nlohmann::json script_;
  std::filesystem::path base_dir_;
  mutable std::mutex mutex_;
  std::map<std::string, std::size_t> cursors_;
  std::size_t calls_ = 0;
  std::vector<std::string> prompts_;
};

}  // namespace spcgen

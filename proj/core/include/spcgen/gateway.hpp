#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spcgen/catalog.hpp"
#include "spcgen/error.hpp"
#include "spcgen/prompt.hpp"

namespace spcgen {

struct ProviderConfig {
  /// Base URL of an OpenAI-compatible API (".../v1"), or "mock:<script.json>".
  std::string endpoint_url;
  /// Environment variable holding the API key. Keys are never read from files.
  std::string api_key_env = "OPENAI_API_KEY";
  std::string model_id;
  double temperature = 0.0;
  std::chrono::milliseconds request_timeout{120000};
  std::size_t max_parallel = 4;
};

/// Throws Error(kInvalidArgument) on an empty endpoint, non-positive timeout,
/// negative temperature, or zero parallelism.
void check_config(const ProviderConfig& config);

/// Identifies the logical call sequence a request belongs to ("sample-3",
/// "row-C-07"). Scripted clients keep one cursor per stream.
struct CallContext {
  std::string stream;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;

  /// Returns the model's text. Inline references are already part of the
  /// prompt; attachments carry provider file ids. Throws Error(kAuth),
  /// Error(kTimeout), or ProviderError.
  virtual std::string complete(std::string_view prompt, std::span<const ReferenceDoc> attachments,
                               const CallContext& context) = 0;
};

/// HTTP client for the chat-completions wire format, or the scripted mock
/// for "mock:" endpoints.
std::unique_ptr<ChatClient> make_chat_client(const ProviderConfig& config);

struct RetryPolicy {
  std::chrono::milliseconds base_delay{1000};
  double factor = 2.0;
  /// Relative jitter: the delay is scaled by a uniform factor in [1-j, 1+j].
  double jitter = 0.2;
  std::chrono::milliseconds max_delay{30000};

  /// Delay before retry number `retry` (1-based), without jitter.
  std::chrono::milliseconds nominal_delay(std::size_t retry) const;
  static RetryPolicy none() { return {std::chrono::milliseconds(0), 1.0, 0.0, std::chrono::milliseconds(0)}; }
};

struct AttemptRecord {
  std::size_t attempt_index = 1;
  std::string raw_output;
  bool parse_ok = false;
  bool validation_ok = false;
  std::size_t distinct_area_count = 0;
  std::optional<std::string> failure_reason;

  bool operator==(const AttemptRecord&) const = default;
};

struct SampleOutcome {
  std::size_t sample_index = 1;
  std::vector<AttemptRecord> attempts;
  std::optional<SpcCatalog> catalog;
  /// Report of the last attempt that parsed.
  std::optional<ValidationReport> validation;

  bool operator==(const SampleOutcome&) const = default;
};

struct GenerationOutcome {
  std::optional<SpcCatalog> catalog;
  std::vector<SampleOutcome> samples;
  std::optional<std::size_t> selected_sample;
  std::optional<ValidationReport> validation;

  /// Attempts of all samples in sample order.
  std::vector<AttemptRecord> attempts() const;
  std::size_t provider_calls() const;

  bool operator==(const GenerationOutcome&) const = default;
};

/// No sample produced a valid catalog; carries every attempt made.
class ExhaustedError : public Error {
 public:
  explicit ExhaustedError(GenerationOutcome outcome);
  const GenerationOutcome& outcome() const noexcept { return outcome_; }

 private:
  GenerationOutcome outcome_;
};

struct GenerateOptions {
  RetryPolicy retry;
  std::size_t max_parallel = 1;
  /// Called after every provider call, before the sample continues. May be
  /// invoked from several threads.
  std::function<void(std::size_t sample_index, const AttemptRecord&)> on_attempt;
};

/// Runs sample_count independent samples, each retrying up to max_attempts
/// times through complete, parse_latex_table, normalize_ids and
/// validate_catalog. The most complete valid sample wins.
///
/// Throws Error(kAuth) at once on an authentication failure and
/// ExhaustedError when no sample succeeds.
GenerationOutcome generate_catalog(const GenerationRequest& req, ChatClient& client,
                                   const GenerateOptions& options = {});

struct CompletenessKey {
  std::size_t sample_index = 0;
  std::size_t distinct_area_count = 0;
  std::size_t row_count = 0;
};

/// Argmax of distinct areas, then rows, then the lowest index.
/// Throws Error(kEmpty) on an empty list.
std::size_t select_most_complete(std::span<const CompletenessKey> samples);
std::size_t select_most_complete(const std::vector<std::pair<std::size_t, SpcCatalog>>& samples);

}  // namespace spcgen

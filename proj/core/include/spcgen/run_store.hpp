#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spcgen/catalog.hpp"
#include "spcgen/gateway.hpp"
#include "spcgen/judge.hpp"
#include "spcgen/matching.hpp"
#include "spcgen/prompt.hpp"
#include "spcgen/scoring.hpp"

namespace spcgen {

enum class RunStatus { kPending, kRunning, kSucceeded, kFailed };

std::string_view code(RunStatus s);
std::optional<RunStatus> parse_run_status(std::string_view token);

/// Keys of RunManifest::artifact_paths.
namespace artifacts {
inline constexpr std::string_view kPrompt = "prompt";
inline constexpr std::string_view kAttempts = "attempts";
inline constexpr std::string_view kCatalog = "catalog";
inline constexpr std::string_view kCatalogJson = "catalog_json";
inline constexpr std::string_view kCatalogCsv = "catalog_csv";
inline constexpr std::string_view kValidation = "validation";
inline constexpr std::string_view kEval = "eval";
inline constexpr std::string_view kJudge = "judge";
}  // namespace artifacts

struct RunManifest {
  std::string run_id;
  /// ISO-8601 UTC with milliseconds.
  std::string created_at;
  Sector sector = Sector::kNT;
  std::string model_id;
  std::string template_name;
  std::string template_version;
  std::vector<std::string> reference_ids;
  RunStatus status = RunStatus::kPending;
  /// Paths relative to the run directory.
  std::map<std::string, std::string> artifact_paths;
  /// `E_*` token and message of a failed run.
  std::optional<std::string> error;
  std::size_t provider_calls = 0;
  std::optional<std::size_t> selected_sample;

  bool operator==(const RunManifest&) const = default;
};

/// What a client submits to start a run. Reference ids are resolved
/// against the store's registry.
struct RunRequest {
  Sector sector = Sector::kNT;
  std::string model_id;
  /// Bundled template name; empty selects the default for `language`.
  std::string template_name;
  /// Template source text; takes precedence over `template_name`.
  std::optional<std::string> template_text;
  std::string language = "de";
  std::vector<std::string> reference_ids;
  /// Id of a succeeded run whose catalog serves as one-shot example.
  std::optional<std::string> example_run_id;
  std::optional<std::size_t> sample_count;
  std::size_t max_attempts = 5;
  bool retry_with_feedback = false;
  std::map<std::string, std::string> variables;

  bool operator==(const RunRequest&) const = default;
};

struct RunStoreOptions {
  /// Endpoint and key variable for generation and judging; the model comes
  /// from each request.
  ProviderConfig provider;
  RetryPolicy retry;
  JudgeOptions judge;
  EmbeddingConfig embedding;
  /// Runs executing at the same time.
  std::size_t max_concurrent_runs = 2;
  /// Marks PENDING/RUNNING runs FAILED on open. Only safe when no other
  /// process is writing to the store.
  bool recover_interrupted = false;
  std::function<std::unique_ptr<ChatClient>(const ProviderConfig&)> client_factory = make_chat_client;
};

/// Directory-backed store of references and runs:
///
///   <root>/references/registry.json, <root>/references/<id>.txt
///   <root>/runs/<run_id>/manifest.json, prompt.txt, attempts/, catalog.*
///
/// Manifests are replaced by rename, so a run directory either does not
/// exist or holds a parseable manifest. Each run's pipeline is the only
/// writer of its directory apart from attach_* calls, which serialize on a
/// store lock.
class RunStore {
 public:
  RunStore(std::filesystem::path root, RunStoreOptions options = {});
  /// Waits for scheduled runs.
  ~RunStore();

  RunStore(const RunStore&) = delete;
  RunStore& operator=(const RunStore&) = delete;

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path run_dir(std::string_view run_id) const;

  /// Stores a reference document and returns it with its new id.
  ReferenceDoc register_reference(ReferenceDoc doc);
  /// Registered references without their content.
  std::vector<ReferenceDoc> list_references() const;
  /// Throws Error(kUnknownReference).
  ReferenceDoc get_reference(std::string_view id) const;

  /// Validates the request, resolves references, writes the manifest
  /// (PENDING) and the prompt, then schedules generation. Throws
  /// Error(kUnknownReference), Error(kInvalidArgument), or template errors.
  std::string create_run(const RunRequest& request);
  /// Blocks until the run is SUCCEEDED or FAILED.
  RunManifest wait(std::string_view run_id);
  void wait_all();

  /// Throws Error(kNotFound).
  RunManifest get_run(std::string_view run_id) const;
  /// Newest first.
  std::vector<RunManifest> list_runs(std::optional<Sector> sector = std::nullopt,
                                     std::optional<RunStatus> status = std::nullopt) const;

  /// Throws Error(kNotFound) or Error(kRunNotSucceeded).
  SpcCatalog load_catalog(std::string_view run_id) const;
  std::string load_catalog_xlsx(std::string_view run_id) const;
  std::vector<AttemptRecord> load_attempts(std::string_view run_id) const;
  /// Latest report, if any.
  std::optional<EvalReport> load_evaluation(std::string_view run_id) const;
  std::optional<JudgeSummary> load_judging(std::string_view run_id) const;

  /// Scores the run's catalog against `gold` and stores the report as the
  /// next `eval-N.json`. Throws Error(kNotFound) or Error(kRunNotSucceeded).
  EvalReport attach_evaluation(std::string_view run_id, const SpcCatalog& gold, ScorerKind scorer);
  EvalReport attach_evaluation(std::string_view run_id, const std::filesystem::path& gold_xlsx,
                               ScorerKind scorer);
  /// Judges the run's catalog with `model_id` (the run's model when empty)
  /// and stores the summary as the next `judge-N.json`.
  JudgeSummary attach_judging(std::string_view run_id, std::string model_id = {});

 private:
  struct Impl;
  std::filesystem::path root_;
  std::unique_ptr<Impl> impl_;
};

/// Opens the store containing a run directory (`<root>/runs/<id>`).
std::filesystem::path store_root_of(const std::filesystem::path& run_dir);

}  // namespace spcgen

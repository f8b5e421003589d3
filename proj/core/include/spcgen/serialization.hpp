#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spcgen/annotate.hpp"
#include "spcgen/catalog.hpp"
#include "spcgen/gateway.hpp"
#include "spcgen/judge.hpp"
#include "spcgen/matching.hpp"
#include "spcgen/prompt.hpp"
#include "spcgen/run_store.hpp"

// JSON forms used by the run store and the HTTP API. Every *_from_json
// function throws Error(kSerialize) on a missing or mistyped field.
namespace spcgen {

using nlohmann::json;

json to_json(const SpcRow& row);
json to_json(const SpcCatalog& catalog);
SpcCatalog catalog_from_json(const json& j);

json to_json(const ValidationReport& report);
ValidationReport validation_from_json(const json& j);

json to_json(const AttemptRecord& record);
AttemptRecord attempt_from_json(const json& j);

json to_json(const EvalReport& report);
EvalReport eval_report_from_json(const json& j);

json to_json(const JudgeVerdict& verdict);
JudgeVerdict verdict_from_json(const json& j);
json to_json(const JudgeSummary& summary);
JudgeSummary judge_summary_from_json(const json& j);

json to_json(const AgreementStats& stats);
json to_json(const ReviewQueue& queue);

/// Content is omitted unless `with_content` is set.
json to_json(const ReferenceDoc& doc, bool with_content = false);
ReferenceDoc reference_from_json(const json& j);

json to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const json& j);

json to_json(const RunRequest& request);
/// Missing optional fields take their defaults; an unknown sector or
/// template language is Error(kInvalidArgument).
RunRequest run_request_from_json(const json& j);

/// Parses text as JSON. Throws Error(kSerialize).
json parse_json(std::string_view text);
/// Throws Error(kIo) or Error(kSerialize).
json read_json_file(const std::filesystem::path& path);
/// Writes to a sibling temp file and renames it over `path`.
/// Throws Error(kIo).
void write_json_atomic(const std::filesystem::path& path, const json& j);
void write_text_atomic(const std::filesystem::path& path, std::string_view text);

/// Human-readable summaries for the CLI.
std::string format_eval_summary(const EvalReport& report);
std::string format_judge_summary(const JudgeSummary& summary);
std::string format_agreement(const AgreementStats& stats);
std::string format_validation(const ValidationReport& report);

}  // namespace spcgen

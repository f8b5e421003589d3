#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spcgen/catalog.hpp"
#include "spcgen/gateway.hpp"
#include "spcgen/prompt.hpp"

namespace spcgen {

/// PR precision and relevance, CC completeness and coverage, DS
/// differentiation and scalability, LF language and formality.
enum class Dimension { kPR, kCC, kDS, kLF };

inline constexpr std::array<Dimension, 4> kAllDimensions{Dimension::kPR, Dimension::kCC, Dimension::kDS,
                                                          Dimension::kLF};

std::string_view code(Dimension d);
/// Rubric heading as worded in the English judge prompt.
std::string_view rubric_heading(Dimension d);

struct JudgeVerdict {
  std::string area_id;
  std::string criterion_id;
  /// Indexed by Dimension; each in 1..5.
  std::array<int, 4> scores{};
  std::array<std::string, 4> justifications;
  std::optional<std::string> improvement;

  int score(Dimension d) const { return scores[static_cast<std::size_t>(d)]; }

  bool operator==(const JudgeVerdict&) const = default;
};

/// Line-oriented extraction of the rubric response format. English and
/// German headings are recognized, as are the PR/CC/DS/LF codes. Scores
/// must be integers in 1..5, written in brackets or after the colon.
/// Throws Error(kJudgeUnparseable) naming the first unmet expectation.
JudgeVerdict parse_judge_response(std::string_view text);

/// Renders a verdict in the response format; parse_judge_response inverts it.
std::string render_verdict(const JudgeVerdict& verdict);

struct JudgeOptions {
  PromptTemplate prompt_template = default_judge_template();
  /// Extra calls after the first failed one.
  std::size_t max_retries = 3;
  std::size_t max_parallel = 1;
  RetryPolicy retry = RetryPolicy::none();
};

struct RowJudgement {
  JudgeVerdict verdict;
  std::size_t calls = 0;
};

/// Judges one row, retrying on provider and parse failures. The row's own
/// ids are kept in the verdict. Error(kAuth) is not retried.
RowJudgement judge_row(const SpcRow& row, ChatClient& client, const JudgeOptions& options = {});

struct FailedRow {
  std::string criterion_id;
  std::string reason;

  bool operator==(const FailedRow&) const = default;
};

struct JudgeSummary {
  /// Indexed by Dimension; means over judged rows.
  std::array<double, 4> means{};
  std::size_t row_count = 0;
  std::vector<FailedRow> failed_rows;
  /// Verdicts in catalog order (failed rows omitted).
  std::vector<JudgeVerdict> verdicts;
  std::size_t provider_calls = 0;

  double mean(Dimension d) const { return means[static_cast<std::size_t>(d)]; }

  bool operator==(const JudgeSummary&) const = default;
};

/// Per-dimension means of the verdicts, in order.
std::array<double, 4> dimension_means(const std::vector<JudgeVerdict>& verdicts);

/// Judges every row with bounded concurrency. Throws Error(kAllRowsFailed)
/// when no row could be judged, Error(kEmptyCatalog) for an empty catalog.
JudgeSummary judge_catalog(const SpcCatalog& catalog, ChatClient& client, const JudgeOptions& options = {});

}  // namespace spcgen

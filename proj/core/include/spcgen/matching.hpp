#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spcgen/catalog.hpp"
#include "spcgen/scoring.hpp"

namespace spcgen {

/// |gn| x |gt| similarity grid, row-major.
struct SimilarityMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> scores;
  std::vector<std::string> gn_ids;
  std::vector<std::string> gt_ids;

  double at(std::size_t i, std::size_t j) const { return scores[i * cols + j]; }
};

/// One-to-one (gn_index, gt_index) pairs sorted by gn_index.
struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  /// Sum of matched scores, accumulated in ascending gn order.
  double total_score = 0.0;
};

/// Scores every gn AA against every gt AA. Throws Error(kEmptyCatalog).
SimilarityMatrix build_matrix(const SpcCatalog& gn, const SpcCatalog& gt, Scorer& scorer);

/// Maximum-weight matching of size min(rows, cols) (Hungarian method on the
/// zero-padded square). Among optimal matchings the lexicographically
/// smallest pair list is returned. Throws Error(kInvalidArgument) on an
/// empty or inconsistent matrix or non-finite entries.
Assignment optimal_assignment(std::size_t rows, std::size_t cols, std::span<const double> scores);
Assignment optimal_assignment(const SimilarityMatrix& m);

/// 2qc/(q+c), or 0 when q+c is 0.
double harmonic_mean(double quality, double coverage);

struct MatchedPair {
  std::size_t gn_index = 0;
  std::size_t gt_index = 0;
  std::string gn_id;
  std::string gt_id;
  double aa_score = 0.0;
  double spc_score = 0.0;

  bool operator==(const MatchedPair&) const = default;
};

struct ColumnScores {
  double quality = 0.0;
  double harmonic = 0.0;
  std::vector<double> matched_scores;

  bool operator==(const ColumnScores&) const = default;
};

struct EvalReport {
  std::string scorer;
  std::size_t gn_rows = 0;
  std::size_t gt_rows = 0;
  double raw_coverage = 0.0;
  /// min(raw_coverage, 1).
  double coverage = 0.0;
  ColumnScores aa;
  ColumnScores spc;
  std::vector<MatchedPair> pairs;

  bool operator==(const EvalReport&) const = default;
};

/// Matches rows on the AA column, then scores the SPC text of matched pairs
/// only. Throws Error(kEmptyCatalog).
EvalReport evaluate_tables(const SpcCatalog& gn, const SpcCatalog& gt, Scorer& scorer);

/// Metrics from precomputed parts; `spc_scores` aligns with `assignment.pairs`.
EvalReport assemble_report(const SpcCatalog& gn, const SpcCatalog& gt, const SimilarityMatrix& matrix,
                           const Assignment& assignment, std::span<const double> spc_scores,
                           std::string scorer_name);

struct RankedCandidate {
  std::size_t gt_index = 0;
  std::string criterion_id;
  double score = 0.0;

  bool operator==(const RankedCandidate&) const = default;
};

/// gt rows ordered by SPC similarity to `gn_row`, descending, ties in gt
/// order. With `aa_filter`, only rows whose area of action has the same
/// token sequence are listed.
std::vector<RankedCandidate> rank_candidates(const SpcRow& gn_row, const SpcCatalog& gt, Scorer& scorer,
                                             bool aa_filter = false);

}  // namespace spcgen

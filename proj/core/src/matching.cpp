#include "spcgen/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "spcgen/error.hpp"
#include "spcgen/text.hpp"

namespace spcgen {
namespace {

// Minimum-cost perfect matching on a dense n x n cost matrix (1-based
// potentials, e-maxx formulation). Returns row -> column and leaves the dual
// potentials in u and v.
std::vector<std::size_t> hungarian(const std::vector<double>& cost, std::size_t n, std::vector<double>& u,
                                   std::vector<double>& v) {
  const double inf = std::numeric_limits<double>::infinity();
  u.assign(n + 1, 0.0);
  v.assign(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0);
  std::vector<std::size_t> way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n, 0);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

// Rewrites `match` into the lexicographically smallest perfect matching of
// the tight-edge graph, row by row, keeping earlier rows fixed.
class TightMatcher {
 public:
  TightMatcher(std::vector<std::vector<char>> tight, std::vector<std::size_t> match)
      : n_(match.size()), tight_(std::move(tight)), row_to_col_(std::move(match)),
        col_to_row_(n_, 0), locked_(n_, 0) {
    for (std::size_t i = 0; i < n_; ++i) col_to_row_[row_to_col_[i]] = i;
  }

  std::vector<std::size_t> run() {
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < row_to_col_[i]; ++j) {
        if (tight_[i][j] && try_assign(i, j)) break;
      }
      locked_[i] = 1;
    }
    return row_to_col_;
  }

 private:
  // Moves row i to column j if the remaining unlocked rows can still be
  // perfectly matched.
  bool try_assign(std::size_t i, std::size_t j) {
    const std::size_t owner = col_to_row_[j];
    if (locked_[owner]) return false;
    const auto saved_r = row_to_col_;
    const auto saved_c = col_to_row_;
    const std::size_t freed = row_to_col_[i];
    row_to_col_[i] = j;
    col_to_row_[j] = i;
    locked_[i] = 1;
    // `owner` now needs a column; the only free one is `freed`.
    std::vector<char> seen(n_, 0);
    if (augment(owner, freed, seen)) {
      locked_[i] = 0;
      return true;
    }
    locked_[i] = 0;
    row_to_col_ = saved_r;
    col_to_row_ = saved_c;
    return false;
  }

  bool augment(std::size_t row, std::size_t free_col, std::vector<char>& seen) {
    for (std::size_t j = 0; j < n_; ++j) {
      if (!tight_[row][j] || seen[j]) continue;
      seen[j] = 1;
      if (j == free_col) {
        row_to_col_[row] = j;
        col_to_row_[j] = row;
        return true;
      }
      const std::size_t other = col_to_row_[j];
      if (locked_[other] || other == row) continue;
      if (augment(other, free_col, seen)) {
        row_to_col_[row] = j;
        col_to_row_[j] = row;
        return true;
      }
    }
    return false;
  }

  std::size_t n_;
  std::vector<std::vector<char>> tight_;
  std::vector<std::size_t> row_to_col_;
  std::vector<std::size_t> col_to_row_;
  std::vector<char> locked_;
};

void require_non_empty(const SpcCatalog& gn, const SpcCatalog& gt) {
  if (gn.rows.empty()) throw Error(Errc::kEmptyCatalog, "generated catalog has no rows");
  if (gt.rows.empty()) throw Error(Errc::kEmptyCatalog, "reference catalog has no rows");
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

}  // namespace

SimilarityMatrix build_matrix(const SpcCatalog& gn, const SpcCatalog& gt, Scorer& scorer) {
  require_non_empty(gn, gt);
  SimilarityMatrix m;
  m.rows = gn.rows.size();
  m.cols = gt.rows.size();
  std::vector<std::string> a, b;
  for (const auto& r : gn.rows) {
    a.push_back(r.area_of_action);
    m.gn_ids.push_back(r.criterion_id);
  }
  for (const auto& r : gt.rows) {
    b.push_back(r.area_of_action);
    m.gt_ids.push_back(r.criterion_id);
  }
  m.scores = scorer.score_matrix(a, b);
  for (double& s : m.scores) {
    if (!std::isfinite(s)) throw Error(Errc::kEmbedBackend, "scorer returned a non-finite similarity");
    s = std::clamp(s, 0.0, 1.0);
  }
  return m;
}

Assignment optimal_assignment(std::size_t rows, std::size_t cols, std::span<const double> scores) {
  if (rows == 0 || cols == 0) throw Error(Errc::kInvalidArgument, "assignment needs a non-empty matrix");
  if (scores.size() != rows * cols) throw Error(Errc::kInvalidArgument, "matrix size does not match its shape");
  double scale = 1.0;
  for (double s : scores) {
    if (!std::isfinite(s)) throw Error(Errc::kInvalidArgument, "matrix contains a non-finite score");
    scale = std::max(scale, std::abs(s));
  }

  const std::size_t n = std::max(rows, cols);
  std::vector<double> cost(n * n, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) cost[i * n + j] = -scores[i * cols + j];
  }
  std::vector<double> u, v;
  auto match = hungarian(cost, n, u, v);

  // Reduced costs are zero on optimal edges up to rounding in the potentials.
  const double eps = 1e-9 * scale * static_cast<double>(n);
  std::vector<std::vector<char>> tight(n, std::vector<char>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      tight[i][j] = std::abs(cost[i * n + j] - u[i + 1] - v[j + 1]) <= eps;
    }
    tight[i][match[i]] = 1;
  }
  match = TightMatcher(std::move(tight), std::move(match)).run();

  Assignment out;
  for (std::size_t i = 0; i < rows; ++i) {
    if (match[i] < cols) {
      out.pairs.emplace_back(i, match[i]);
      out.total_score += scores[i * cols + match[i]];
    }
  }
  return out;
}

Assignment optimal_assignment(const SimilarityMatrix& m) {
  return optimal_assignment(m.rows, m.cols, m.scores);
}

double harmonic_mean(double quality, double coverage) {
  const double denom = quality + coverage;
  if (denom == 0.0) return 0.0;
  return 2.0 * quality * coverage / denom;
}

EvalReport assemble_report(const SpcCatalog& gn, const SpcCatalog& gt, const SimilarityMatrix& matrix,
                           const Assignment& assignment, std::span<const double> spc_scores,
                           std::string scorer_name) {
  EvalReport report;
  report.scorer = std::move(scorer_name);
  report.gn_rows = gn.rows.size();
  report.gt_rows = gt.rows.size();
  report.raw_coverage = static_cast<double>(gn.rows.size()) / static_cast<double>(gt.rows.size());
  report.coverage = std::min(report.raw_coverage, 1.0);
  for (std::size_t k = 0; k < assignment.pairs.size(); ++k) {
    const auto [i, j] = assignment.pairs[k];
    MatchedPair pair;
    pair.gn_index = i;
    pair.gt_index = j;
    pair.gn_id = gn.rows[i].criterion_id;
    pair.gt_id = gt.rows[j].criterion_id;
    pair.aa_score = matrix.at(i, j);
    pair.spc_score = std::clamp(spc_scores[k], 0.0, 1.0);
    report.aa.matched_scores.push_back(pair.aa_score);
    report.spc.matched_scores.push_back(pair.spc_score);
    report.pairs.push_back(std::move(pair));
  }
  report.aa.quality = mean(report.aa.matched_scores);
  report.spc.quality = mean(report.spc.matched_scores);
  report.aa.harmonic = harmonic_mean(report.aa.quality, report.coverage);
  report.spc.harmonic = harmonic_mean(report.spc.quality, report.coverage);
  return report;
}

EvalReport evaluate_tables(const SpcCatalog& gn, const SpcCatalog& gt, Scorer& scorer) {
  const auto matrix = build_matrix(gn, gt, scorer);
  const auto assignment = optimal_assignment(matrix);
  std::vector<std::pair<std::string, std::string>> spc_pairs;
  spc_pairs.reserve(assignment.pairs.size());
  for (const auto& [i, j] : assignment.pairs) {
    spc_pairs.emplace_back(gn.rows[i].criterion_text, gt.rows[j].criterion_text);
  }
  const auto spc_scores = scorer.score_pairs(spc_pairs);
  return assemble_report(gn, gt, matrix, assignment, spc_scores, std::string(code(scorer.kind())));
}

std::vector<RankedCandidate> rank_candidates(const SpcRow& gn_row, const SpcCatalog& gt, Scorer& scorer,
                                             bool aa_filter) {
  const auto gn_area = text::tokenize(gn_row.area_of_action);
  std::vector<std::size_t> indices;
  std::vector<std::string> texts;
  for (std::size_t j = 0; j < gt.rows.size(); ++j) {
    if (aa_filter && text::tokenize(gt.rows[j].area_of_action) != gn_area) continue;
    indices.push_back(j);
    texts.push_back(gt.rows[j].criterion_text);
  }
  std::vector<RankedCandidate> out;
  if (indices.empty()) return out;
  const std::string query[1] = {gn_row.criterion_text};
  const auto scores = scorer.score_matrix(query, texts);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    out.push_back({indices[k], gt.rows[indices[k]].criterion_id, std::clamp(scores[k], 0.0, 1.0)});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedCandidate& x, const RankedCandidate& y) { return x.score > y.score; });
  return out;
}

}  // namespace spcgen

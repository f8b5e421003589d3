#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spcgen/catalog.hpp"
#include "spcgen/matching.hpp"
#include "spcgen/scoring.hpp"

namespace spcgen {

/// How much of one criterion the other covers. Skipped pairs count as
/// DISJOINT.
enum class OverlapLabel { kEqual, kGnSubsetGt, kGtSubsetGn, kPartial, kDisjoint };

inline constexpr std::array<OverlapLabel, 5> kAllLabels{OverlapLabel::kEqual, OverlapLabel::kGnSubsetGt,
                                                        OverlapLabel::kGtSubsetGn, OverlapLabel::kPartial,
                                                        OverlapLabel::kDisjoint};

std::string_view code(OverlapLabel label);
/// Codes plus "SKIP"/"SKIPPED" and an empty cell, which map to DISJOINT.
std::optional<OverlapLabel> parse_overlap_label(std::string_view token);

struct AnnotationEntry {
  std::string gn_id;
  std::string gt_id;
  OverlapLabel label = OverlapLabel::kDisjoint;
  std::string note;

  bool operator==(const AnnotationEntry&) const = default;
};

struct AnnotationSheet {
  std::string annotator_id;
  std::vector<AnnotationEntry> entries;
  bool completed = false;

  bool operator==(const AnnotationSheet&) const = default;
};

/// Reads `gn_id,gt_id,label[,note]` CSV. Throws Error(kBadHeader) on a wrong
/// header and Error(kInvalidArgument) on unknown labels or duplicate pairs.
AnnotationSheet parse_annotation_csv(std::string_view text, std::string annotator_id = {});
AnnotationSheet load_annotation_csv(const std::filesystem::path& path);
std::string render_annotation_csv(const AnnotationSheet& sheet);

struct AgreementStats {
  double percent_agreement = 0.0;
  /// Unset when chance agreement is 1 (kappa undefined).
  std::optional<double> kappa;
  std::size_t n_items = 0;
  /// confusion[a][b]: items labelled a by the first sheet and b by the second.
  std::array<std::array<std::size_t, 5>, 5> confusion{};

  bool operator==(const AgreementStats&) const = default;
};

/// Cohen's kappa statistics from a square count matrix.
AgreementStats agreement_from_confusion(const std::vector<std::vector<std::size_t>>& confusion);

/// Pairs both sheets by (gn_id, gt_id). Throws Error(kMisaligned) listing
/// the pairs only one sheet labels, Error(kEmpty) when there are no items.
AgreementStats compute_agreement(const AnnotationSheet& a, const AnnotationSheet& b);

struct ReviewQueue {
  std::string gn_id;
  std::vector<RankedCandidate> candidates;
  /// Set when the area filter left nothing to review.
  bool empty_after_filter = false;

  bool operator==(const ReviewQueue&) const = default;
};

/// One ranked candidate list per gn row. Throws Error(kEmptyCatalog).
std::vector<ReviewQueue> build_review_queue(const SpcCatalog& gn, const SpcCatalog& gt, Scorer& scorer,
                                            bool aa_filter = false);

/// Annotation CSV pre-filled in queue order with an empty label column and
/// the similarity score as note.
std::string render_review_csv(const std::vector<ReviewQueue>& queues);

}  // namespace spcgen

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace spcgen {

/// Procurement sector (group of goods and services) a catalog covers.
enum class Sector { kNT, kFN, kLM, kTS, kCS, kPS, kCD };

inline constexpr std::array<Sector, 7> kAllSectors{
    Sector::kNT, Sector::kFN, Sector::kLM, Sector::kTS,
    Sector::kCS, Sector::kPS, Sector::kCD};

std::string_view code(Sector s);
/// English display name ("furniture", "print services", ...).
std::string_view display_name(Sector s);
/// Display name in the given language tag; falls back to English.
std::string_view display_name(Sector s, std::string_view language);
std::optional<Sector> parse_sector(std::string_view code);

/// TS technical specification, ZK award criterion, EK selection criterion,
/// TB participation condition.
enum class Category { kTS, kZK, kEK, kTB };

std::string_view code(Category c);
std::optional<Category> parse_category(std::string_view token);

enum class CatalogSource { kEuGpp, kToolbox, kExpert, kGenerated };

std::string_view code(CatalogSource s);
std::optional<CatalogSource> parse_catalog_source(std::string_view token);

struct AmbitionLevels {
  std::string basis;
  std::string good_practice;
  std::string exemplary;

  bool operator==(const AmbitionLevels&) const = default;
};

/// One criterion. Fields hold the text as parsed; the category is kept as
/// the raw token so malformed model output can still be reported on.
struct SpcRow {
  std::string area_of_action;
  std::string area_id;
  std::string criterion_id;
  std::string category;
  std::string criterion_text;
  AmbitionLevels ambition;
  std::string source_url;
  /// Columns beyond the fixed schema, in source order (header, value).
  std::vector<std::pair<std::string, std::string>> extras;

  bool operator==(const SpcRow&) const = default;
};

struct SpcCatalog {
  Sector sector = Sector::kNT;
  CatalogSource source = CatalogSource::kGenerated;
  std::vector<SpcRow> rows;

  /// Number of distinct `area_id` values.
  std::size_t distinct_area_count() const;

  bool operator==(const SpcCatalog&) const = default;
};

struct ValidationIssue {
  std::size_t row_index = 0;
  std::string rule_id;
  std::string message;

  bool operator==(const ValidationIssue&) const = default;
};

struct ValidationWarning {
  std::string rule_id;
  std::string message;

  bool operator==(const ValidationWarning&) const = default;
};

struct ValidationReport {
  std::vector<ValidationIssue> errors;
  std::vector<ValidationWarning> warnings;
  std::size_t distinct_area_count = 0;

  bool is_valid() const { return errors.empty(); }
  bool has_error(std::string_view rule_id) const;
  bool has_warning(std::string_view rule_id) const;

  bool operator==(const ValidationReport&) const = default;
};

namespace rules {
inline constexpr std::string_view kEmptyArea = "E_EMPTY_AREA";
inline constexpr std::string_view kBadAreaId = "E_BAD_AREA_ID";
inline constexpr std::string_view kBadCriterionId = "E_BAD_CRITERION_ID";
inline constexpr std::string_view kBadCategory = "E_BAD_CATEGORY";
inline constexpr std::string_view kEmptyCriterion = "E_EMPTY_CRITERION";
inline constexpr std::string_view kEmptyAmbition = "E_EMPTY_AMBITION";
inline constexpr std::string_view kMissingSource = "E_MISSING_SOURCE";
inline constexpr std::string_view kBadSourceUrl = "E_BAD_SOURCE_URL";
inline constexpr std::string_view kDuplicateCriterionId = "E_DUPLICATE_CRITERION_ID";
inline constexpr std::string_view kAreaNameMismatch = "E_AREA_NAME_MISMATCH";
inline constexpr std::string_view kMinAreasWarning = "W_MIN_AREAS";
inline constexpr std::string_view kEmptyAmbitionWarning = "W_EMPTY_AMBITION";
}  // namespace rules

/// Catalogs should span at least this many distinct areas of action.
inline constexpr std::size_t kMinDistinctAreas = 20;

/// Checks every row and catalog invariant. Never throws; failures are
/// reported. Identical input yields an identical report.
ValidationReport validate_catalog(const SpcCatalog& catalog);

/// Syntactic absolute http(s) URL check. No network access.
bool is_absolute_http_url(std::string_view url);

bool is_canonical_area_id(std::string_view id);
bool is_canonical_criterion_id(std::string_view id);

/// `HF-<n>` becomes `AA-<n>`; canonical ids are returned unchanged.
/// Throws Error(kUnparseableId) otherwise.
std::string normalize_area_id(std::string_view id);
/// `K-<n>` becomes `C-<n>` padded to two digits; canonical ids are returned
/// unchanged. Throws Error(kUnparseableId) otherwise.
std::string normalize_criterion_id(std::string_view id);

/// Rewrites the German-prefixed id families on every row. Idempotent.
SpcCatalog normalize_ids(SpcCatalog catalog);

}  // namespace spcgen

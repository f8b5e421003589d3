#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spcgen/catalog.hpp"

namespace spcgen {

/// Column order of the exchange format and of generated LaTeX tables.
inline constexpr std::array<std::string_view, 9> kCatalogHeader{
    "AA",        "AA-ID",           "C-ID",          "CC",        "SPC",
    "AL: Basis", "AL: Good Practice", "AL: Exemplary", "Source URL"};

struct RowFailure {
  std::size_t source_row_index = 0;
  std::string reason;

  bool operator==(const RowFailure&) const = default;
};

/// Invariant: rows_parsed + row_failures.size() equals the number of body
/// rows encountered.
struct ParseDiagnostics {
  std::vector<RowFailure> row_failures;
  std::size_t rows_parsed = 0;

  std::size_t rows_encountered() const { return rows_parsed + row_failures.size(); }
};

struct TableParseResult {
  SpcCatalog catalog;
  ParseDiagnostics diagnostics;
  /// False when the input had no Source URL column.
  bool has_source_column = true;
};

// --- LaTeX ---------------------------------------------------------------

/// Extracts the first tabular-like environment from model output and maps
/// its columns positionally onto the catalog schema. A header row is
/// required; 9 columns, or 8 when the Source URL column is absent.
///
/// Throws Error(kNoTable) when no tabular environment exists and
/// Error(kBadHeader) on an unexpected column count. Malformed body rows are
/// reported in the diagnostics and left out of the catalog.
TableParseResult parse_latex_table(std::string_view text, Sector sector,
                                   CatalogSource source = CatalogSource::kGenerated);

/// Escapes text for a LaTeX table cell. Inverse of latex_to_text for
/// single-spaced, trimmed text.
std::string latex_escape(std::string_view text);

/// Reduces a LaTeX cell to plain text: unescapes specials, drops formatting
/// commands and multirow/makecell wrappers, collapses whitespace.
std::string latex_to_text(std::string_view latex);

/// Renders a catalog as a booktabs tabular with the schema header.
std::string render_latex_table(const SpcCatalog& catalog, bool include_source = true);

// --- XLSX ----------------------------------------------------------------

struct XlsxImportOptions {
  /// Overrides what the workbook records; required when it records nothing.
  std::optional<Sector> sector;
  std::optional<CatalogSource> source;
};

/// Serialized single-sheet workbook, byte-identical for identical input.
std::string export_xlsx_bytes(const SpcCatalog& catalog);

/// Writes the workbook and a CSV debug dump beside it (same stem, `.csv`).
/// Throws Error(kIo) on write failure.
void export_xlsx(const SpcCatalog& catalog, const std::filesystem::path& path);

/// Reads the first worksheet. Headers are matched by name; unknown columns
/// are kept per row in `SpcRow::extras`. Merged cells are replicated over
/// their range. Throws Error(kIo) or Error(kBadHeader).
TableParseResult import_xlsx(const std::filesystem::path& path,
                             const XlsxImportOptions& options = {});
TableParseResult import_xlsx_bytes(std::string_view bytes,
                                   const XlsxImportOptions& options = {});

/// UTF-8 CSV with the same header as the workbook.
std::string render_csv(const SpcCatalog& catalog);

}  // namespace spcgen

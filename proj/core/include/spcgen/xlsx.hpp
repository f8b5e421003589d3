#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace spcgen::xlsx {

/// Inclusive, zero-based cell rectangle.
struct CellRange {
  std::size_t first_row = 0;
  std::size_t first_col = 0;
  std::size_t last_row = 0;
  std::size_t last_col = 0;

  bool operator==(const CellRange&) const = default;
};

/// A worksheet as a ragged grid of cell texts. Missing cells read as "".
struct Sheet {
  std::string name = "Sheet1";
  std::vector<std::vector<std::string>> rows;
  std::vector<CellRange> merges;
  /// Rows whose cells are written in bold (header rows).
  std::size_t bold_rows = 0;
};

struct DocumentProperties {
  std::string subject;
  std::string category;
};

struct Workbook {
  Sheet sheet;
  DocumentProperties properties;
};

/// Serializes a one-sheet workbook with a shared-string table. Output is
/// deterministic. Control characters are stored with the `_xHHHH_` escape.
std::string write_workbook(const Sheet& sheet, const DocumentProperties& properties = {});

/// Parses the first worksheet in workbook order. Merged ranges are reported,
/// not applied. Throws Error(kIo) on malformed packages.
Workbook read_workbook(std::string_view bytes);

/// "A1"-style reference to zero-based (row, column); false if malformed.
bool parse_cell_ref(std::string_view ref, std::size_t& row, std::size_t& col);
std::string cell_ref(std::size_t row, std::size_t col);

}  // namespace spcgen::xlsx

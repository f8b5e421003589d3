#include <algorithm>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include "spcgen/csv.hpp"
#include "spcgen/error.hpp"
#include "spcgen/table_io.hpp"
#include "spcgen/text.hpp"
#include "spcgen/xlsx.hpp"

namespace spcgen {
namespace {

constexpr std::size_t kUrlColumn = 8;

std::vector<std::string> schema_cells(const SpcRow& row) {
  return {row.area_of_action,       row.area_id,
          row.criterion_id,         row.category,
          row.criterion_text,       row.ambition.basis,
          row.ambition.good_practice, row.ambition.exemplary,
          row.source_url};
}

// Union of extra headers, ordered so that every row's extras appear in
// their own order (topological sort, ties by first appearance). Rows that
// contradict each other fall back to first appearance.
std::vector<std::string> extra_headers(const SpcCatalog& catalog) {
  std::vector<std::string> seen;
  std::map<std::string, std::size_t> index;
  for (const auto& row : catalog.rows) {
    for (const auto& [key, value] : row.extras) {
      if (index.emplace(key, seen.size()).second) seen.push_back(key);
    }
  }
  const std::size_t n = seen.size();
  std::vector<std::set<std::size_t>> after(n);
  std::vector<std::size_t> indegree(n, 0);
  for (const auto& row : catalog.rows) {
    for (std::size_t k = 1; k < row.extras.size(); ++k) {
      const auto from = index.at(row.extras[k - 1].first);
      const auto to = index.at(row.extras[k].first);
      if (from != to && after[from].insert(to).second) ++indegree[to];
    }
  }
  std::set<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (indegree[i] == 0) ready.insert(i);
  }
  std::vector<std::string> headers;
  std::vector<bool> placed(n, false);
  while (!ready.empty()) {
    const auto i = *ready.begin();
    ready.erase(ready.begin());
    headers.push_back(seen[i]);
    placed[i] = true;
    for (auto j : after[i]) {
      if (--indegree[j] == 0) ready.insert(j);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!placed[i]) headers.push_back(seen[i]);
  }
  return headers;
}

std::vector<std::vector<std::string>> to_grid(const SpcCatalog& catalog) {
  const auto extras = extra_headers(catalog);
  std::vector<std::vector<std::string>> grid;
  grid.reserve(catalog.rows.size() + 1);
  std::vector<std::string> header(kCatalogHeader.begin(), kCatalogHeader.end());
  header.insert(header.end(), extras.begin(), extras.end());
  grid.push_back(std::move(header));
  for (const auto& row : catalog.rows) {
    auto cells = schema_cells(row);
    for (const auto& key : extras) {
      auto it = std::find_if(row.extras.begin(), row.extras.end(),
                             [&](const auto& kv) { return kv.first == key; });
      cells.push_back(it == row.extras.end() ? std::string() : it->second);
    }
    grid.push_back(std::move(cells));
  }
  return grid;
}

// Header comparison ignores case and all whitespace ("AL:Basis" == "al: basis").
std::string header_key(std::string_view s) {
  std::string key;
  for (char c : text::to_lower(s)) {
    if (c != ' ' && c != '\t' && c != '\n' && c != '\r') key += c;
  }
  return key;
}

void apply_merges(xlsx::Sheet& sheet) {
  for (const auto& m : sheet.merges) {
    if (m.first_row >= sheet.rows.size()) continue;
    const auto& origin_row = sheet.rows[m.first_row];
    const std::string value = m.first_col < origin_row.size() ? origin_row[m.first_col] : std::string();
    const std::size_t last_row = std::min(m.last_row, m.first_row + 10000);
    const std::size_t last_col = std::min(m.last_col, m.first_col + 1000);
    if (sheet.rows.size() <= last_row) sheet.rows.resize(last_row + 1);
    for (std::size_t r = m.first_row; r <= last_row; ++r) {
      auto& cells = sheet.rows[r];
      if (cells.size() <= last_col) cells.resize(last_col + 1);
      for (std::size_t c = m.first_col; c <= last_col; ++c) cells[c] = value;
    }
  }
}

bool all_empty(const std::vector<std::string>& cells) {
  return std::all_of(cells.begin(), cells.end(),
                     [](const std::string& c) { return text::trim(c).empty(); });
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open '" + path.string() + "'");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(Errc::kIo, "read failed for '" + path.string() + "'");
  return data;
}

void write_file(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write '" + path.string() + "'");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  out.close();
  if (!out) throw Error(Errc::kIo, "write failed for '" + path.string() + "'");
}

}  // namespace

std::string export_xlsx_bytes(const SpcCatalog& catalog) {
  xlsx::Sheet sheet;
  sheet.name = std::string(code(catalog.sector));
  sheet.rows = to_grid(catalog);
  sheet.bold_rows = 1;
  return xlsx::write_workbook(sheet, {std::string(code(catalog.sector)),
                                      std::string(code(catalog.source))});
}

void export_xlsx(const SpcCatalog& catalog, const std::filesystem::path& path) {
  write_file(path, export_xlsx_bytes(catalog));
  auto csv_path = path;
  csv_path.replace_extension(".csv");
  write_file(csv_path, render_csv(catalog));
}

std::string render_csv(const SpcCatalog& catalog) {
  std::string out;
  for (const auto& row : to_grid(catalog)) out += csv::format_row(row);
  return out;
}

TableParseResult import_xlsx(const std::filesystem::path& path, const XlsxImportOptions& options) {
  return import_xlsx_bytes(read_file(path), options);
}

TableParseResult import_xlsx_bytes(std::string_view bytes, const XlsxImportOptions& options) {
  auto book = xlsx::read_workbook(bytes);
  apply_merges(book.sheet);
  auto& grid = book.sheet.rows;

  TableParseResult result;
  auto& catalog = result.catalog;

  if (options.sector) {
    catalog.sector = *options.sector;
  } else if (auto s = parse_sector(text::trim(book.properties.subject))) {
    catalog.sector = *s;
  } else if (auto s2 = parse_sector(text::trim(book.sheet.name))) {
    catalog.sector = *s2;
  } else {
    throw Error(Errc::kInvalidArgument,
                "workbook does not record a sector; pass one explicitly");
  }
  if (options.source) {
    catalog.source = *options.source;
  } else if (auto src = parse_catalog_source(text::trim(book.properties.category))) {
    catalog.source = *src;
  } else {
    catalog.source = CatalogSource::kExpert;
  }

  std::size_t header_row = 0;
  while (header_row < grid.size() && all_empty(grid[header_row])) ++header_row;
  if (header_row == grid.size()) throw Error(Errc::kBadHeader, "worksheet has no header row");

  const auto& header = grid[header_row];
  std::vector<std::optional<std::size_t>> schema_col(kCatalogHeader.size());
  std::vector<std::pair<std::size_t, std::string>> extra_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string key = header_key(header[c]);
    if (key.empty()) continue;
    bool matched = false;
    for (std::size_t k = 0; k < kCatalogHeader.size(); ++k) {
      if (!schema_col[k] && key == header_key(kCatalogHeader[k])) {
        schema_col[k] = c;
        matched = true;
        break;
      }
    }
    if (!matched) extra_cols.emplace_back(c, std::string(text::trim(header[c])));
  }
  std::vector<std::string> missing;
  for (std::size_t k = 0; k < kUrlColumn; ++k) {
    if (!schema_col[k]) missing.emplace_back(kCatalogHeader[k]);
  }
  if (!missing.empty()) {
    std::string names;
    for (const auto& m : missing) names += (names.empty() ? "\"" : ", \"") + m + "\"";
    throw Error(Errc::kBadHeader, "missing required column(s) " + names);
  }
  result.has_source_column = schema_col[kUrlColumn].has_value();

  auto cell = [](const std::vector<std::string>& cells, std::optional<std::size_t> col) {
    return col && *col < cells.size() ? cells[*col] : std::string();
  };

  for (std::size_t r = header_row + 1; r < grid.size(); ++r) {
    const auto& cells = grid[r];
    if (all_empty(cells)) continue;
    const std::size_t body_index = result.diagnostics.rows_encountered();
    SpcRow row;
    row.area_of_action = cell(cells, schema_col[0]);
    row.area_id = cell(cells, schema_col[1]);
    row.criterion_id = cell(cells, schema_col[2]);
    row.category = cell(cells, schema_col[3]);
    row.criterion_text = cell(cells, schema_col[4]);
    row.ambition.basis = cell(cells, schema_col[5]);
    row.ambition.good_practice = cell(cells, schema_col[6]);
    row.ambition.exemplary = cell(cells, schema_col[7]);
    row.source_url = cell(cells, schema_col[kUrlColumn]);
    const bool schema_empty = all_empty(schema_cells(row));
    for (const auto& [col, name] : extra_cols) {
      std::string value = cell(cells, col);
      if (!value.empty()) row.extras.emplace_back(name, std::move(value));
    }
    if (schema_empty) {
      result.diagnostics.row_failures.push_back(
          {body_index, "worksheet row " + std::to_string(r + 1) + " has no catalog fields"});
      continue;
    }
    catalog.rows.push_back(std::move(row));
    ++result.diagnostics.rows_parsed;
  }
  return result;
}

}  // namespace spcgen

#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "spcgen/csv.hpp"
#include "spcgen/error.hpp"
#include "spcgen/table_io.hpp"
#include "spcgen/xlsx.hpp"

using namespace spcgen;

namespace {

xlsx::Sheet header_sheet(std::vector<std::string> header) {
  xlsx::Sheet s;
  s.rows.push_back(std::move(header));
  return s;
}

std::vector<std::string> schema_header() {
  return {kCatalogHeader.begin(), kCatalogHeader.end()};
}

}  // namespace

TEST(Xlsx, CellRefs) {
  std::size_t r = 0, c = 0;
  ASSERT_TRUE(xlsx::parse_cell_ref("AB12", r, c));
  EXPECT_EQ(r, 11u);
  EXPECT_EQ(c, 27u);
  EXPECT_EQ(xlsx::cell_ref(11, 27), "AB12");
  EXPECT_EQ(xlsx::cell_ref(0, 0), "A1");
  EXPECT_FALSE(xlsx::parse_cell_ref("12A", r, c));
  EXPECT_FALSE(xlsx::parse_cell_ref("A0", r, c));
}

TEST(Xlsx, RawSheetRoundTrip) {
  xlsx::Sheet s;
  s.name = "FN";
  s.rows = {{"a", "b", ""}, {"", "x\ty\nz", "_x0041_"}, {"ÄÖÜ <&>", "  padded  "}};
  s.merges = {{0, 0, 1, 0}};
  const auto book = xlsx::read_workbook(xlsx::write_workbook(s, {"FN", "EXPERT"}));
  EXPECT_EQ(book.sheet.name, "FN");
  ASSERT_EQ(book.sheet.rows.size(), 3u);
  EXPECT_EQ(book.sheet.rows[1][1], "x\ty\nz");
  EXPECT_EQ(book.sheet.rows[1][2], "_x0041_");
  EXPECT_EQ(book.sheet.rows[2][0], "ÄÖÜ <&>");
  EXPECT_EQ(book.sheet.rows[2][1], "  padded  ");
  EXPECT_EQ(book.sheet.merges, s.merges);
  EXPECT_EQ(book.properties.subject, "FN");
  EXPECT_EQ(book.properties.category, "EXPERT");
}

TEST(Xlsx, GarbageIsIoError) {
  try {
    xlsx::read_workbook("not a zip file at all");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kIo);
  }
}

TEST(CatalogXlsx, TwoRowsGiveThreeSheetRows) {
  const auto c = fixtures::valid_catalog(2);
  const auto book = xlsx::read_workbook(export_xlsx_bytes(c));
  ASSERT_EQ(book.sheet.rows.size(), 3u);
  EXPECT_EQ(book.sheet.rows[0], schema_header());
}

TEST(CatalogXlsx, EmptyCatalogHeaderOnly) {
  SpcCatalog c;
  c.sector = Sector::kCS;
  const auto book = xlsx::read_workbook(export_xlsx_bytes(c));
  ASSERT_EQ(book.sheet.rows.size(), 1u);
  const auto back = import_xlsx_bytes(export_xlsx_bytes(c));
  EXPECT_EQ(back.catalog, c);
}

TEST(CatalogXlsx, Deterministic) {
  const auto c = fixtures::valid_catalog(4, 2);
  EXPECT_EQ(export_xlsx_bytes(c), export_xlsx_bytes(c));
}

TEST(CatalogXlsx, RoundTripProperty) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 60; ++i) {
    const auto c = fixtures::random_exchange_catalog(rng);
    const auto back = import_xlsx_bytes(export_xlsx_bytes(c));
    ASSERT_EQ(back.catalog, c) << "iteration " << i;
    EXPECT_TRUE(back.diagnostics.row_failures.empty());
  }
}

TEST(CatalogXlsx, LatexEscapesSurviveParseExportImport) {
  const std::string header = "AA & AA-ID & C-ID & CC & SPC & AL: Basis & AL: Good Practice & AL: Exemplary & Source URL \\\\\n";
  const std::string text = "\\begin{tabular}{lllllllll}\n" + header +
                           "Größe \\& Form & AA-1 & C-01 & TS & Mindestens 70\\% Holz \\& Metall & b & g & e & "
                           "https://a.org \\\\\n\\end{tabular}";
  const auto parsed = parse_latex_table(text, Sector::kFN).catalog;
  const auto back = import_xlsx_bytes(export_xlsx_bytes(parsed)).catalog;
  EXPECT_EQ(back, parsed);
  EXPECT_EQ(back.rows[0].criterion_text, "Mindestens 70% Holz & Metall");
  EXPECT_EQ(back.rows[0].area_of_action, "Größe & Form");
}

TEST(CatalogXlsx, MissingCategoryHeaderIsNamed) {
  auto header = schema_header();
  header.erase(header.begin() + 3);
  auto sheet = header_sheet(header);
  sheet.rows.push_back({"A", "AA-1", "C-01", "text", "b", "g", "e", "https://a.org"});
  try {
    import_xlsx_bytes(xlsx::write_workbook(sheet), {.sector = Sector::kFN, .source = std::nullopt});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kBadHeader);
    EXPECT_NE(std::string(e.what()).find("\"CC\""), std::string::npos) << e.what();
  }
}

TEST(CatalogXlsx, HeadersMatchedByNameWithExtras) {
  auto sheet = header_sheet({"C-ID", "AA", "AA-ID", "CC", "SPC", "AL: Basis", "AL: Good Practice",
                             "AL: Exemplary", "Source URL", "Dimension", "Quelle"});
  sheet.rows.push_back({"C-01", "Energy", "AA-1", "ZK", "text", "b", "g", "e", "https://a.org", "ecological", ""});
  const auto result = import_xlsx_bytes(xlsx::write_workbook(sheet), {.sector = Sector::kNT, .source = std::nullopt});
  ASSERT_EQ(result.catalog.rows.size(), 1u);
  const auto& row = result.catalog.rows[0];
  EXPECT_EQ(row.area_of_action, "Energy");
  EXPECT_EQ(row.criterion_id, "C-01");
  EXPECT_EQ(row.category, "ZK");
  ASSERT_EQ(row.extras.size(), 1u);
  EXPECT_EQ(row.extras[0].first, "Dimension");
  EXPECT_EQ(row.extras[0].second, "ecological");
  EXPECT_EQ(result.catalog.source, CatalogSource::kExpert);
}

TEST(CatalogXlsx, MergedCellsReplicated) {
  auto sheet = header_sheet(schema_header());
  sheet.rows.push_back({"Energy", "AA-1", "C-01", "TS", "t1", "b", "g", "e", "https://a.org"});
  sheet.rows.push_back({"", "", "C-02", "ZK", "t2", "b", "g", "e", "https://a.org"});
  sheet.merges = {{1, 0, 2, 0}, {1, 1, 2, 1}};
  const auto result = import_xlsx_bytes(xlsx::write_workbook(sheet), {.sector = Sector::kNT, .source = std::nullopt});
  ASSERT_EQ(result.catalog.rows.size(), 2u);
  EXPECT_EQ(result.catalog.rows[1].area_of_action, "Energy");
  EXPECT_EQ(result.catalog.rows[1].area_id, "AA-1");
}

TEST(CatalogXlsx, SectorRequiredWhenUnrecorded) {
  auto sheet = header_sheet(schema_header());
  sheet.name = "Kriterien";
  try {
    import_xlsx_bytes(xlsx::write_workbook(sheet));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kInvalidArgument);
  }
}

TEST(CatalogXlsx, CsvDumpBesideWorkbook) {
  fixtures::TempDir dir;
  const auto c = fixtures::valid_catalog(3);
  export_xlsx(c, dir / "out.xlsx");
  ASSERT_TRUE(std::filesystem::exists(dir / "out.csv"));
  const auto rows = csv::parse(fixtures::read_file(dir / "out.csv"));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], schema_header());
  EXPECT_EQ(rows[2][2], "C-02");
  EXPECT_EQ(import_xlsx(dir / "out.xlsx").catalog, c);
}

TEST(CatalogXlsx, UnwritablePathIsIoError) {
  fixtures::TempDir dir;
  try {
    export_xlsx(fixtures::valid_catalog(1), dir / "missing" / "deeper" / "x.xlsx");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kIo);
  }
}

TEST(Csv, QuoteAndParse) {
  EXPECT_EQ(csv::quote("plain"), "plain");
  EXPECT_EQ(csv::quote("a,b"), "\"a,b\"");
  EXPECT_EQ(csv::quote("say \"hi\""), "\"say \"\"hi\"\"\"");
  const auto rows = csv::parse("\xEF\xBB\xBFh1,h2\r\n\"multi\nline\",\"x,\"\"y\"\"\"\r\n");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0][0], "h1");
  EXPECT_EQ(rows[1][0], "multi\nline");
  EXPECT_EQ(rows[1][1], "x,\"y\"");
  EXPECT_THROW(csv::parse("\"open"), Error);
}

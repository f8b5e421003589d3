#pragma once

#include <cstddef>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spcgen/catalog.hpp"
#include "spcgen/judge.hpp"

namespace spcgen::fixtures {

/// The two-row furniture table shown as the structure example, optionally
/// with a Source URL column appended.
std::string furniture_example_latex(bool with_urls);

/// Deterministic valid catalog: `areas` areas with `rows_per_area` rows each.
SpcCatalog valid_catalog(std::size_t areas, std::size_t rows_per_area = 1, Sector sector = Sector::kFN,
                         CatalogSource source = CatalogSource::kGenerated);

/// Random words; `tricky` mixes in umlauts, LaTeX specials, separators,
/// quotes, and line breaks.
std::string random_text(std::mt19937_64& rng, std::size_t min_words, std::size_t max_words, bool tricky);

/// Valid catalog with random texts and distinct area names.
SpcCatalog random_valid_catalog(std::mt19937_64& rng, std::size_t min_rows, std::size_t max_rows,
                                bool tricky = false);

/// Arbitrary catalog for format round-trips: random ids and categories,
/// tricky texts, sometimes extra columns.
SpcCatalog random_exchange_catalog(std::mt19937_64& rng);

/// Verdict whose texts survive render/parse (single-spaced, trimmed).
JudgeVerdict random_verdict(std::mt19937_64& rng);

/// Judge response in the rubric format with every score set to `score`.
std::string uniform_judge_response(int score, const std::string& area_id, const std::string& criterion_id);

/// Unique directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void write_file(const std::filesystem::path& path, const std::string& text);
std::string read_file(const std::filesystem::path& path);

/// Writes a mock provider script and returns the "mock:<path>" endpoint.
std::string write_mock_script(const std::filesystem::path& path, const nlohmann::json& script);

/// Runs a shell command, returning its exit status; stdout and stderr are
/// captured into `output`.
int run_command(const std::string& command, std::string& output);

}  // namespace spcgen::fixtures

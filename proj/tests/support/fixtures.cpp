#include "fixtures.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <sys/wait.h>

namespace spcgen::fixtures {
namespace {

constexpr std::array<const char*, 32> kWords{
    "supplier",  "must",        "provide",   "evidence",   "of",         "recycled",  "content",   "wood",
    "chemical",  "management",  "system",    "packaging",  "energy",     "efficiency", "label",     "annual",
    "Lieferant", "Nachweis",    "Holz",      "Verpackung", "Energie",    "Zertifikat", "Prüfung",   "Lösungsmittel",
    "Größe",     "Qualität",    "Bürgerin",  "Emissionen", "Transport",  "Reparatur", "Ersatzteile", "Garantie"};

constexpr std::array<const char*, 22> kTricky{
    "50%",   "A&B",     "R&D",     "$5",      "#1",     "snake_case", "{braces}", "x^2",
    "~tilde", "a\\b",   "semi;colon", "comma,", "\"quoted\"", "it's", "Maß", "ÄÖÜäöüß",
    "_x0041_", "tab\there", "line\nbreak", "[1–5]", "<tag>", "a|b"};

constexpr std::array<const char*, 4> kCategories{"TS", "ZK", "EK", "TB"};

std::size_t uniform(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

std::string id_string(const char* prefix, std::size_t n, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, n);
  return buf;
}

}  // namespace

std::string furniture_example_latex(bool with_urls) {
  std::string cols = with_urls ? "lcllp{6cm}p{4cm}p{4cm}p{4cm}l" : "lcllp{6cm}p{4cm}p{4cm}p{4cm}";
  std::string header =
      R"(\textbf{AA} & \textbf{AA-ID} & \textbf{C-ID} & \textbf{CC} & \textbf{SPC} & \textbf{AL: Basis} & \textbf{AL: Good Practice} & \textbf{AL: Exemplary})";
  if (with_urls) header += R"( & \textbf{Source URL})";
  std::string row1 =
      R"(\multirow{5}{*}{\makecell[l]{Chemical \\ management}} & \multirow{5}{*}{AA-1} & \multirow{5}{*}{C-01} & \multirow{5}{*}{TS} & The supplier must implement a chemical management system that minimizes the use of hazardous substances. Evidence must be provided through system descriptions and inspection reports. & Proof of a chemical management system. & Proof of a chemical management system with annual review and update. & Proof of a chemical management system with complete elimination of substances of very high concern (SVHC).)";
  std::string row2 =
      R"(\multirow{5}{*}{\makecell[l]{Wood origin \\ and certification}} & \multirow{5}{*}{AA-2} & \multirow{5}{*}{C-02} & \multirow{5}{*}{TS} & The wood used must come from verifiably sustainable forestry. Certificates such as FSC or PEFC must be provided as proof. The traceability of the wood supply chain must be demonstrated through appropriate documentation. & At least 70\% of the wood used is FSC or PEFC certified. & At least 90\% of the wood used is FSC or PEFC certified; complete supply chain documentation. & 100\% of the wood used is FSC or PEFC certified; additionally, proof of chain of custody for all suppliers.)";
  if (with_urls) {
    row1 += R"( & https://www.beschaffung.admin.ch/toolbox/moebel/chemikalien)";
    row2 += R"( & https://green-business.ec.europa.eu/green-public-procurement/furniture)";
  }
  std::string out;
  out += "\\begin{tabular}{" + cols + "}\n\\toprule\n";
  out += header + " \\\\\n\\midrule\n";
  out += row1 + " \\\\\n\\midrule\n";
  out += row2 + "\\\\\n\\bottomrule\n\\end{tabular}\n";
  return out;
}

SpcCatalog valid_catalog(std::size_t areas, std::size_t rows_per_area, Sector sector, CatalogSource source) {
  SpcCatalog c;
  c.sector = sector;
  c.source = source;
  std::size_t n = 0;
  for (std::size_t a = 1; a <= areas; ++a) {
    for (std::size_t r = 0; r < rows_per_area; ++r) {
      ++n;
      SpcRow row;
      row.area_of_action = "Area topic " + std::to_string(a) + " " + kWords[a % kWords.size()];
      row.area_id = "AA-" + std::to_string(a);
      row.criterion_id = id_string("C-", n, 2);
      row.category = kCategories[n % kCategories.size()];
      row.criterion_text = "The supplier must document measure " + std::to_string(n) + " concerning " +
                           kWords[(n * 7) % kWords.size()] + " and " + kWords[(n * 3 + 1) % kWords.size()] + ".";
      row.ambition.basis = "Basic proof for measure " + std::to_string(n) + ".";
      row.ambition.good_practice = "Annual review of measure " + std::to_string(n) + ".";
      row.ambition.exemplary = "Independent audit of measure " + std::to_string(n) + ".";
      row.source_url = "https://example.org/criteria/" + std::to_string(n);
      c.rows.push_back(std::move(row));
    }
  }
  return c;
}

std::string random_text(std::mt19937_64& rng, std::size_t min_words, std::size_t max_words, bool tricky) {
  const std::size_t n = uniform(rng, min_words, max_words);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    if (tricky && uniform(rng, 0, 3) == 0) out += kTricky[uniform(rng, 0, kTricky.size() - 1)];
    else out += kWords[uniform(rng, 0, kWords.size() - 1)];
  }
  return out;
}

SpcCatalog random_valid_catalog(std::mt19937_64& rng, std::size_t min_rows, std::size_t max_rows, bool tricky) {
  SpcCatalog c;
  c.sector = kAllSectors[uniform(rng, 0, kAllSectors.size() - 1)];
  c.source = CatalogSource::kGenerated;
  const std::size_t n = uniform(rng, min_rows, max_rows);
  const std::size_t areas = uniform(rng, 1, n);
  for (std::size_t i = 0; i < n; ++i) {
    // First `areas` rows open a new area each, later rows reuse one.
    const std::size_t a = i < areas ? i + 1 : uniform(rng, 1, areas);
    SpcRow row;
    row.area_of_action = "Area " + std::to_string(a) + " " + kWords[a % kWords.size()];
    row.area_id = "AA-" + std::to_string(a);
    row.criterion_id = id_string("C-", i + 1, 2);
    row.category = kCategories[uniform(rng, 0, 3)];
    row.criterion_text = random_text(rng, 4, 20, tricky);
    row.ambition.basis = random_text(rng, 2, 8, tricky);
    row.ambition.good_practice = random_text(rng, 2, 8, tricky);
    row.ambition.exemplary = random_text(rng, 2, 8, tricky);
    row.source_url = "https://example.org/" + std::to_string(uniform(rng, 1, 99999));
    c.rows.push_back(std::move(row));
  }
  return c;
}

SpcCatalog random_exchange_catalog(std::mt19937_64& rng) {
  SpcCatalog c;
  c.sector = kAllSectors[uniform(rng, 0, kAllSectors.size() - 1)];
  c.source = static_cast<CatalogSource>(uniform(rng, 0, 3));
  std::vector<std::string> extra_headers;
  const std::size_t n_extra = uniform(rng, 0, 2);
  const std::array<const char*, 3> extra_names{"Dimension", "Quelle Seite", "Bemerkung"};
  for (std::size_t k = 0; k < n_extra; ++k) extra_headers.push_back(extra_names[k]);
  const std::size_t n = uniform(rng, 1, 25);
  for (std::size_t i = 0; i < n; ++i) {
    SpcRow row;
    row.area_of_action = random_text(rng, 1, 4, true);
    row.area_id = uniform(rng, 0, 4) ? "AA-" + std::to_string(uniform(rng, 1, 30)) : "HF-" + std::to_string(i);
    row.criterion_id = id_string("C-", i + 1, 2);
    row.category = uniform(rng, 0, 5) ? kCategories[uniform(rng, 0, 3)] : "XX";
    row.criterion_text = random_text(rng, 3, 30, true);
    row.ambition.basis = random_text(rng, 0, 8, true);
    row.ambition.good_practice = random_text(rng, 0, 8, true);
    row.ambition.exemplary = random_text(rng, 0, 8, true);
    row.source_url = uniform(rng, 0, 3) ? "https://example.org/a?b=1&c=" + std::to_string(i) : "";
    for (const auto& h : extra_headers) {
      if (uniform(rng, 0, 2)) row.extras.emplace_back(h, random_text(rng, 1, 5, true));
    }
    c.rows.push_back(std::move(row));
  }
  return c;
}

JudgeVerdict random_verdict(std::mt19937_64& rng) {
  JudgeVerdict v;
  v.area_id = "AA-" + std::to_string(uniform(rng, 1, 40));
  v.criterion_id = id_string("C-", uniform(rng, 1, 120), 2);
  for (std::size_t k = 0; k < 4; ++k) {
    v.scores[k] = static_cast<int>(uniform(rng, 1, 5));
    // Tab and newline are the only tricky tokens that do not survive the
    // one-line format, so they are replaced.
    std::string text = random_text(rng, 0, 25, true);
    for (char& ch : text) {
      if (ch == '\n' || ch == '\t') ch = '-';
    }
    v.justifications[k] = text;
  }
  if (uniform(rng, 0, 1)) {
    v.improvement = "Add " + random_text(rng, 1, 12, false);
  }
  return v;
}

std::string uniform_judge_response(int score, const std::string& area_id, const std::string& criterion_id) {
  JudgeVerdict v;
  v.area_id = area_id;
  v.criterion_id = criterion_id;
  for (std::size_t k = 0; k < 4; ++k) {
    v.scores[k] = score;
    v.justifications[k] = "Meets the expectations for this dimension.";
  }
  return render_verdict(v);
}

TempDir::TempDir() {
  static std::mt19937_64 rng{std::random_device{}()};
  for (;;) {
    auto candidate = std::filesystem::temp_directory_path() / ("spcgen-test-" + std::to_string(rng() % 100000000));
    if (std::filesystem::create_directory(candidate)) {
      path_ = candidate;
      return;
    }
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string write_mock_script(const std::filesystem::path& path, const nlohmann::json& script) {
  write_file(path, script.dump(2));
  return "mock:" + path.string();
}

int run_command(const std::string& command, std::string& output) {
  output.clear();
  FILE* pipe = popen((command + " 2>&1").c_str(), "r");
  if (!pipe) return -1;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) output.append(buf, n);
  const int status = pclose(pipe);
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace spcgen::fixtures

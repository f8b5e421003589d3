// Acceptance suite: one PASS/FAIL line per criterion.
//
//   spcgen_acceptance                      run every criterion
//   spcgen_acceptance --criterion <name>   run one

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "spcgen/annotate.hpp"
#include "spcgen/catalog.hpp"
#include "spcgen/error.hpp"
#include "spcgen/gateway.hpp"
#include "spcgen/judge.hpp"
#include "spcgen/matching.hpp"
#include "spcgen/providers.hpp"
#include "spcgen/run_store.hpp"
#include "spcgen/scoring.hpp"
#include "spcgen/serialization.hpp"
#include "spcgen/table_io.hpp"

using namespace spcgen;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

// Collects sub-checks; the criterion passes when every check does.
class Outcome {
 public:
  void check(bool ok, const std::string& what) {
    if (!ok) {
      ok_ = false;
      failures_.push_back(what);
    }
  }
  void note(const std::string& text) { notes_.push_back(text); }
  bool ok() const { return ok_; }

  std::string detail() const {
    std::string out;
    for (const auto& n : notes_) out += (out.empty() ? "" : "; ") + n;
    for (const auto& f : failures_) out += (out.empty() ? "" : "; ") + std::string("FAILED ") + f;
    return out;
  }

 private:
  bool ok_ = true;
  std::vector<std::string> notes_;
  std::vector<std::string> failures_;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_runtime(Outcome& o, Clock::time_point start, double limit) {
  const double s = seconds_since(start);
  o.note("runtime " + fmt(s, 3) + "s (limit " + fmt(limit, 0) + "s)");
  o.check(s < limit, "runtime " + fmt(s, 3) + "s >= " + fmt(limit, 0) + "s");
}

// Harmonic mean of quality and coverage for three reference pairs, each
// within 0.0005.
Outcome harmonic_fixture() {
  const auto start = Clock::now();
  Outcome o;
  struct Case {
    const char* label;
    double quality, coverage, expected;
  };
  const Case cases[] = {{"NT/gpt-4.1 AA", 0.2159, 0.6329, 0.3220},
                        {"FN/gpt-4.1 AA", 0.3892, 0.8333, 0.5305},
                        {"CD/o4-mini SPC", 0.6461, 1.0000, 0.7723}};
  constexpr double kTol = 0.0005;
  for (const auto& c : cases) {
    const double h = harmonic_mean(c.quality, c.coverage);
    const bool ok = std::fabs(h - c.expected) <= kTol;
    o.note(std::string(c.label) + " " + fmt(h) + " vs " + fmt(c.expected) + (ok ? " ok" : " off"));
    o.check(ok, std::string(c.label) + ": |" + fmt(h, 6) + " - " + fmt(c.expected) + "| > " + fmt(kTol));
  }
  check_runtime(o, start, 1.0);
  return o;
}

// Exhaustive maximum over all one-to-one matchings of size min(rows, cols).
double brute_force_max(std::size_t rows, std::size_t cols, const std::vector<double>& m) {
  const bool transpose = rows > cols;
  const std::size_t small = transpose ? cols : rows;
  const std::size_t large = transpose ? rows : cols;
  std::vector<std::size_t> idx(large);
  std::iota(idx.begin(), idx.end(), 0);
  double best = -std::numeric_limits<double>::infinity();
  // Every permutation of the larger side; its first `small` entries give an
  // injective map from the smaller side.
  do {
    if (!transpose) {
      double s = 0;
      for (std::size_t i = 0; i < small; ++i) s += m[i * cols + idx[i]];
      best = std::max(best, s);
    } else {
      // Sum in ascending row order, like the assignment does.
      std::vector<std::pair<std::size_t, std::size_t>> pairs;
      for (std::size_t j = 0; j < small; ++j) pairs.emplace_back(idx[j], j);
      std::sort(pairs.begin(), pairs.end());
      double s = 0;
      for (const auto& [i, j] : pairs) s += m[i * cols + j];
      best = std::max(best, s);
    }
  } while (std::next_permutation(idx.begin(), idx.end()));
  return best;
}

// 100 random matrices per shape up to 6x6; totals equal the exhaustive
// maximum exactly.
Outcome assignment_oracle() {
  const auto start = Clock::now();
  Outcome o;
  std::mt19937_64 rng(20261017);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t cases = 0, mismatches = 0;
  for (std::size_t r = 1; r <= 6; ++r) {
    for (std::size_t c = 1; c <= 6; ++c) {
      for (int k = 0; k < 100; ++k) {
        std::vector<double> m(r * c);
        for (auto& v : m) v = unit(rng);
        const auto a = optimal_assignment(r, c, m);
        const double best = brute_force_max(r, c, m);
        ++cases;
        if (a.total_score != best || a.pairs.size() != std::min(r, c)) {
          if (mismatches++ < 3) {
            o.check(false, std::to_string(r) + "x" + std::to_string(c) + " total " + fmt(a.total_score, 17) +
                               " vs " + fmt(best, 17));
          }
        }
      }
    }
  }
  o.note(std::to_string(cases) + " matrices over 36 shapes, " + std::to_string(mismatches) +
         " mismatches (tolerance: exact)");
  o.check(mismatches == 0, std::to_string(mismatches) + " mismatches");
  check_runtime(o, start, 10.0);
  return o;
}

// evaluate_tables(c, c) is perfect on 50 random valid catalogs.
Outcome self_evaluation() {
  const auto start = Clock::now();
  Outcome o;
  std::mt19937_64 rng(7);
  LexicalScorer lex;
  constexpr double kTol = 1e-12;
  std::size_t bad = 0;
  for (int i = 0; i < 50; ++i) {
    const auto c = fixtures::random_valid_catalog(rng, 1, 40, i % 2 == 1);
    const auto r = evaluate_tables(c, c, lex);
    const double values[] = {r.aa.quality, r.aa.harmonic, r.spc.quality, r.spc.harmonic, r.coverage};
    for (double v : values) {
      if (std::fabs(v - 1.0) > kTol) {
        ++bad;
        o.check(false, "catalog " + std::to_string(i) + " value " + fmt(v, 12));
        break;
      }
    }
  }
  o.note("50 catalogs, " + std::to_string(bad) + " imperfect (tolerance 1e-12)");
  check_runtime(o, start, 5.0);
  return o;
}

Outcome coverage_fixture() {
  Outcome o;
  LexicalScorer lex;
  const auto r = evaluate_tables(fixtures::valid_catalog(50), fixtures::valid_catalog(60), lex);
  o.note("coverage " + fmt(r.coverage, 6) + " vs 0.8333 (tolerance 0.0001)");
  o.check(std::fabs(r.coverage - 0.8333) <= 0.0001, "coverage " + fmt(r.coverage, 6));
  o.check(r.gn_rows == 50 && r.gt_rows == 60, "row counts");
  return o;
}

GenerationRequest generation_request(std::size_t samples) {
  GenerationRequest req;
  req.sector = Sector::kFN;
  req.model_id = "acceptance-model";
  req.sample_count = samples;
  return req;
}

GenerateOptions no_wait() {
  GenerateOptions opts;
  opts.retry = RetryPolicy::none();
  return opts;
}

std::string valid_table(std::size_t areas, std::size_t rows_per_area = 1) {
  return render_latex_table(fixtures::valid_catalog(areas, rows_per_area));
}

Outcome retry_contract() {
  Outcome o;
  {
    json steps = json::array();
    for (int i = 0; i < 4; ++i) steps.push_back({{"respond", "The table could not be produced."}});
    steps.push_back({{"respond", valid_table(20)}});
    MockChatClient client(steps);
    const auto out = generate_catalog(generation_request(1), client, no_wait());
    const auto records = out.attempts();
    o.note("4 failures then valid: " + std::to_string(records.size()) + " records");
    o.check(out.catalog.has_value(), "no catalog after the fifth attempt");
    o.check(records.size() == 5, "expected 5 records, got " + std::to_string(records.size()));
    o.check(client.call_count() == 5, "expected 5 calls");
    o.check(!records.empty() && records.back().validation_ok, "last record not valid");
  }
  {
    MockChatClient client(json::array({{{"respond", "still no table"}}}));
    try {
      generate_catalog(generation_request(1), client, no_wait());
      o.check(false, "five failures did not raise E_EXHAUSTED");
    } catch (const ExhaustedError& e) {
      const auto& out = e.outcome();
      o.note("5 failures: " + std::string(to_string(e.code())) + ", " + std::to_string(out.attempts().size()) +
             " records");
      o.check(e.code() == Errc::kExhausted, "wrong code");
      o.check(out.attempts().size() == 5, "expected 5 records");
      o.check(!out.catalog.has_value(), "catalog present");
      o.check(client.call_count() == 5, "expected 5 calls");
    }
  }
  return o;
}

Outcome best_of_n() {
  Outcome o;
  {
    // Sample 6 ties sample 3 on areas and wins on rows.
    const std::size_t areas[] = {12, 15, 20, 18, 13, 20, 17, 14, 19, 16};
    json script = json::object();
    for (std::size_t i = 0; i < 10; ++i) {
      const std::size_t rows = i == 5 ? 2 : 1;
      script["sample-" + std::to_string(i + 1)] = json::array({{{"respond", valid_table(areas[i], rows)}}});
    }
    MockChatClient client(script);
    const auto out = generate_catalog(generation_request(10), client, no_wait());
    o.note("areas {12,15,20,18,13,20,17,14,19,16}: selected sample " +
           std::to_string(out.selected_sample.value_or(0)));
    o.check(out.selected_sample == 6u, "expected sample 6");
    o.check(out.catalog && out.catalog->distinct_area_count() == 20, "selected catalog lacks 20 areas");
  }
  {
    // Full tie: lowest index.
    MockChatClient client(json::array({{{"respond", valid_table(20)}}}));
    const auto out = generate_catalog(generation_request(10), client, no_wait());
    o.note("ten identical samples: selected " + std::to_string(out.selected_sample.value_or(0)));
    o.check(out.selected_sample == 1u, "expected sample 1 on a full tie");
  }
  {
    const std::vector<CompletenessKey> keys{{1, 18, 40}, {2, 20, 20}, {3, 20, 25}, {4, 20, 25}, {5, 19, 60}};
    const auto s = select_most_complete(keys);
    o.note("key chain areas>rows>index: " + std::to_string(s));
    o.check(s == 3, "expected 3");
  }
  return o;
}

Outcome validation_contract() {
  Outcome o;
  const auto base = parse_latex_table(fixtures::furniture_example_latex(true), Sector::kFN, CatalogSource::kExpert).catalog;
  const auto r = validate_catalog(base);
  o.note("structure example: valid=" + std::string(r.is_valid() ? "yes" : "no") +
         " W_MIN_AREAS=" + (r.has_warning(rules::kMinAreasWarning) ? "yes" : "no"));
  o.check(base.rows.size() == 2, "fixture row count");
  o.check(r.is_valid(), "fixture not valid");
  o.check(r.has_warning(rules::kMinAreasWarning), "missing W_MIN_AREAS");

  auto no_url = base;
  no_url.rows[1].source_url.clear();
  o.check(validate_catalog(no_url).has_error(rules::kMissingSource), "no E_MISSING_SOURCE");
  auto bad_cat = base;
  bad_cat.rows[0].category = "XX";
  o.check(validate_catalog(bad_cat).has_error(rules::kBadCategory), "no E_BAD_CATEGORY");
  auto dup = base;
  dup.rows[1].criterion_id = dup.rows[0].criterion_id;
  const auto d = validate_catalog(dup);
  o.check(!d.is_valid() && d.has_error(rules::kDuplicateCriterionId), "no E_DUPLICATE_CRITERION_ID");
  o.note("mutations: E_MISSING_SOURCE, E_BAD_CATEGORY, E_DUPLICATE_CRITERION_ID checked");
  return o;
}

Outcome round_trips() {
  Outcome o;
  std::mt19937_64 rng(100);
  std::size_t xlsx_bad = 0, verdict_bad = 0, umlauts = 0, separators = 0;
  for (int i = 0; i < 100; ++i) {
    const auto c = fixtures::random_exchange_catalog(rng);
    for (const auto& row : c.rows) {
      const std::string all = row.area_of_action + row.criterion_text + row.ambition.basis +
                              row.ambition.good_practice + row.ambition.exemplary;
      if (all.find("ä") != std::string::npos || all.find("ö") != std::string::npos ||
          all.find("ü") != std::string::npos) {
        ++umlauts;
      }
      if (all.find('&') != std::string::npos || all.find('|') != std::string::npos) ++separators;
    }
    if (import_xlsx_bytes(export_xlsx_bytes(c)).catalog != c) ++xlsx_bad;
  }
  for (int i = 0; i < 100; ++i) {
    const auto v = fixtures::random_verdict(rng);
    if (!(parse_judge_response(render_verdict(v)) == v)) ++verdict_bad;
  }
  o.note("xlsx 100 catalogs, " + std::to_string(xlsx_bad) + " mismatches (" + std::to_string(umlauts) +
         " rows with umlauts, " + std::to_string(separators) + " with separators)");
  o.note("verdicts 100, " + std::to_string(verdict_bad) + " mismatches");
  o.check(xlsx_bad == 0, "xlsx round-trip");
  o.check(verdict_bad == 0, "verdict round-trip");
  o.check(umlauts > 0 && separators > 0, "generator did not exercise umlauts and separators");
  return o;
}

AnnotationSheet sheet(const std::string& who, const std::vector<OverlapLabel>& labels) {
  AnnotationSheet s;
  s.annotator_id = who;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    s.entries.push_back({"C-" + std::to_string(i), "G-1", labels[i], ""});
  }
  s.completed = true;
  return s;
}

Outcome kappa() {
  Outcome o;
  constexpr double kTol = 1e-9;
  const std::vector<OverlapLabel> mixed{OverlapLabel::kEqual, OverlapLabel::kPartial, OverlapLabel::kDisjoint,
                                        OverlapLabel::kPartial, OverlapLabel::kEqual};
  const auto same = compute_agreement(sheet("a", mixed), sheet("b", mixed));
  o.check(same.kappa && *same.kappa == 1.0, "identical sheets");

  // Independence: rater B's label is uncorrelated with rater A's.
  std::vector<OverlapLabel> a, b;
  for (int i = 0; i < 100; ++i) {
    a.push_back(i < 50 ? OverlapLabel::kEqual : OverlapLabel::kDisjoint);
    b.push_back(i % 2 == 0 ? OverlapLabel::kEqual : OverlapLabel::kDisjoint);
  }
  const auto ind = compute_agreement(sheet("a", a), sheet("b", b));
  o.check(ind.kappa && std::fabs(*ind.kappa) <= kTol, "independence case");

  const auto conf = agreement_from_confusion({{45, 5}, {5, 45}});
  o.check(conf.kappa && std::fabs(*conf.kappa - 0.8) <= kTol, "[[45,5],[5,45]]");

  std::mt19937_64 rng(3);
  bool symmetric = true;
  for (int i = 0; i < 100; ++i) {
    std::vector<OverlapLabel> x(30), y(30);
    for (std::size_t k = 0; k < 30; ++k) {
      x[k] = kAllLabels[rng() % kAllLabels.size()];
      y[k] = rng() % 2 ? x[k] : kAllLabels[rng() % kAllLabels.size()];
    }
    const auto s = compute_agreement(sheet("x", x), sheet("y", y));
    const auto t = compute_agreement(sheet("y", y), sheet("x", x));
    if (s.kappa.has_value() != t.kappa.has_value() || (s.kappa && std::fabs(*s.kappa - *t.kappa) > kTol)) {
      symmetric = false;
    }
  }
  o.check(symmetric, "symmetry under swap");
  o.note("identical " + fmt(same.kappa.value_or(NAN), 6) + ", independence " + fmt(ind.kappa.value_or(NAN), 12) +
         ", confusion " + fmt(conf.kappa.value_or(NAN), 12) + ", swap symmetric on 100 pairs (tolerance 1e-9)");
  return o;
}

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

int cli(const std::string& args, std::string& output) {
  return fixtures::run_command(std::string("'") + SPCGEN_CLI_PATH + "' " + args, output);
}

// generate, evaluate against the same table as gold, judge, then re-read
// every artifact from disk.
Outcome end_to_end() {
  const auto start = Clock::now();
  Outcome o;
  fixtures::TempDir dir;
  const auto table = valid_table(20);
  const json script{{"sample-1", {{{"respond", table}}}},
                    {"default", {{{"respond", fixtures::uniform_judge_response(4, "AA-1", "C-01")}}}}};
  const auto endpoint = fixtures::write_mock_script(dir / "script.json", script);
  const auto store_dir = dir / "store";
  std::string out;

  int rc = cli("generate --sector FN --model mock-gen --samples 1 --retry-base-ms 0 --endpoint '" + endpoint +
                   "' --out " + quote(store_dir),
               out);
  o.check(rc == 0, "generate exit " + std::to_string(rc) + ": " + out);
  if (rc != 0) return o;
  fs::path run;
  for (const auto& e : fs::directory_iterator(store_dir / "runs")) run = e.path();
  const auto run_id = run.filename().string();

  fixtures::write_file(dir / "gold.tex", table);
  rc = cli("export " + quote(dir / "gold.tex") + " --sector FN --out " + quote(dir / "gold.xlsx"), out);
  o.check(rc == 0, "export exit " + std::to_string(rc) + ": " + out);
  rc = cli("evaluate --generated " + quote(run) + " --gold " + quote(dir / "gold.xlsx"), out);
  o.check(rc == 0, "evaluate exit " + std::to_string(rc) + ": " + out);
  rc = cli("judge --catalog " + quote(run) + " --model mock-judge --retry-base-ms 0 --endpoint '" + endpoint + "'",
           out);
  o.check(rc == 0, "judge exit " + std::to_string(rc) + ": " + out);

  try {
    RunStore store(store_dir);
    const auto m = store.get_run(run_id);
    o.check(m.status == RunStatus::kSucceeded, "manifest status");
    const auto catalog = store.load_catalog(run_id);
    o.check(catalog.rows.size() == 20 && catalog.distinct_area_count() == 20, "catalog rows");
    o.check(import_xlsx_bytes(store.load_catalog_xlsx(run_id)).catalog == catalog, "catalog.xlsx re-read");
    o.check(store.load_attempts(run_id).size() == 1, "attempts");
    const auto eval = store.load_evaluation(run_id);
    o.check(eval.has_value(), "evaluation persisted");
    if (eval) {
      o.note("quality " + fmt(eval->aa.quality, 6) + " coverage " + fmt(eval->coverage, 6) + " harmonic " +
             fmt(eval->aa.harmonic, 6) + " (tolerance 1e-12)");
      for (double v : {eval->aa.quality, eval->coverage, eval->aa.harmonic, eval->spc.quality, eval->spc.harmonic}) {
        o.check(std::fabs(v - 1.0) <= 1e-12, "eval value " + fmt(v, 12));
      }
    }
    const auto judged = store.load_judging(run_id);
    o.check(judged.has_value(), "judging persisted");
    if (judged) {
      std::string means;
      for (auto d : kAllDimensions) {
        means += (means.empty() ? "" : "/") + fmt(judged->mean(d), 2);
        o.check(std::fabs(judged->mean(d) - 4.0) <= 1e-12, "judge mean " + std::string(code(d)));
      }
      o.note("judge means " + means + " over " + std::to_string(judged->row_count) + " rows");
      o.check(judged->row_count == 20 && judged->failed_rows.empty(), "judge rows");
    }
    for (const auto& [key, rel] : m.artifact_paths) {
      o.check(fs::exists(run / rel), "artifact " + key + " missing");
    }
    o.check(m.artifact_paths.count("eval") && m.artifact_paths.count("judge"), "eval/judge artifacts recorded");
  } catch (const std::exception& e) {
    o.check(false, std::string("re-read: ") + e.what());
  }
  check_runtime(o, start, 30.0);
  return o;
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {"harmonic-fixture", harmonic_fixture}, {"assignment-oracle", assignment_oracle},
      {"self-evaluation", self_evaluation},   {"coverage-fixture", coverage_fixture},
      {"retry-contract", retry_contract},     {"best-of-n", best_of_n},
      {"validation-contract", validation_contract}, {"round-trips", round_trips},
      {"kappa", kappa},                       {"end-to-end", end_to_end}};
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string only;
  app.add_option("--criterion", only, "Run a single criterion");
  CLI11_PARSE(app, argc, argv);

  bool all_ok = true, found = false;
  for (const auto& c : criteria()) {
    if (!only.empty() && only != c.name) continue;
    found = true;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    std::cout << (o.ok() ? "PASS " : "FAIL ") << c.name << ": " << o.detail() << std::endl;
    all_ok = all_ok && o.ok();
  }
  if (!found) {
    std::cerr << "unknown criterion '" << only << "'\n";
    return 2;
  }
  return all_ok ? 0 : 1;
}

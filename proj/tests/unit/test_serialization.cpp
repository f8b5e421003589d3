#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "spcgen/error.hpp"
#include "spcgen/serialization.hpp"

using namespace spcgen;

TEST(Json, CatalogRoundTripProperty) {
  std::mt19937_64 rng(55);
  for (int i = 0; i < 50; ++i) {
    const auto c = fixtures::random_exchange_catalog(rng);
    EXPECT_EQ(catalog_from_json(parse_json(to_json(c).dump())), c);
  }
}

TEST(Json, ValidationAndAttempts) {
  auto c = fixtures::valid_catalog(3);
  c.rows[1].category = "XX";
  const auto report = validate_catalog(c);
  EXPECT_EQ(validation_from_json(to_json(report)), report);

  AttemptRecord a;
  a.attempt_index = 3;
  a.raw_output = "text";
  a.parse_ok = true;
  a.distinct_area_count = 7;
  a.failure_reason = "E_BAD_CATEGORY at row 2";
  EXPECT_EQ(attempt_from_json(to_json(a)), a);
  a.failure_reason.reset();
  EXPECT_EQ(attempt_from_json(to_json(a)), a);
}

TEST(Json, EvalReport) {
  LexicalScorer lex;
  const auto r = evaluate_tables(fixtures::valid_catalog(4), fixtures::valid_catalog(5), lex);
  const auto j = to_json(r);
  EXPECT_TRUE(j.contains("coverage"));
  EXPECT_TRUE(j.contains("raw_coverage"));
  EXPECT_EQ(eval_report_from_json(parse_json(j.dump())), r);
}

TEST(Json, VerdictsAndSummary) {
  std::mt19937_64 rng(9);
  JudgeSummary s;
  for (int i = 0; i < 5; ++i) s.verdicts.push_back(fixtures::random_verdict(rng));
  s.means = dimension_means(s.verdicts);
  s.row_count = 5;
  s.provider_calls = 6;
  s.failed_rows.push_back({"C-09", "E_JUDGE_UNPARSEABLE: no score for PR"});
  const auto j = to_json(s.verdicts[0]);
  EXPECT_TRUE(j["scores"].contains("PR"));
  EXPECT_EQ(judge_summary_from_json(parse_json(to_json(s).dump())), s);
}

TEST(Json, ReferencesAndManifest) {
  ReferenceDoc d;
  d.id = "r1";
  d.title = "Toolbox";
  d.source_tag = ReferenceSource::kToolbox;
  d.content = "body";
  EXPECT_FALSE(to_json(d).contains("content"));
  EXPECT_EQ(reference_from_json(to_json(d, true)), d);

  RunManifest m;
  m.run_id = "20261017T120000123-abcdef";
  m.created_at = "2026-10-17T12:00:00.123Z";
  m.sector = Sector::kFN;
  m.model_id = "gpt-4.1";
  m.template_name = "generation_de";
  m.template_version = "1.0";
  m.reference_ids = {"r1"};
  m.status = RunStatus::kFailed;
  m.artifact_paths = {{"prompt", "prompt.txt"}};
  m.error = "E_EXHAUSTED: no valid catalog";
  m.provider_calls = 5;
  EXPECT_EQ(manifest_from_json(parse_json(to_json(m).dump())), m);
}

TEST(Json, RunRequestDefaultsAndErrors) {
  const auto r = run_request_from_json(parse_json(R"({"sector": "FN", "model_id": "m"})"));
  EXPECT_EQ(r.sector, Sector::kFN);
  EXPECT_EQ(r.language, "de");
  EXPECT_EQ(r.max_attempts, 5u);
  EXPECT_FALSE(r.sample_count);
  EXPECT_EQ(run_request_from_json(to_json(r)), r);
  try {
    run_request_from_json(parse_json(R"({"sector": "XX", "model_id": "m"})"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kInvalidArgument);
  }
  try {
    run_request_from_json(parse_json(R"({"sector": "FN", "model_id": "m", "language": "fr"})"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kInvalidArgument);
  }
  try {
    run_request_from_json(parse_json(R"({"sector": "FN", "model_id": 7})"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kSerialize);
  }
}

TEST(Json, ParseAndFiles) {
  EXPECT_THROW(parse_json("{oops"), Error);
  fixtures::TempDir dir;
  write_json_atomic(dir / "a.json", json{{"x", 1}});
  EXPECT_EQ(read_json_file(dir / "a.json")["x"], 1);
  try {
    read_json_file(dir / "missing.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kIo);
  }
  write_text_atomic(dir / "t.txt", "hello");
  EXPECT_EQ(fixtures::read_file(dir / "t.txt"), "hello");
}

TEST(Summaries, MentionKeyNumbers) {
  LexicalScorer lex;
  const auto r = evaluate_tables(fixtures::valid_catalog(50), fixtures::valid_catalog(60), lex);
  EXPECT_NE(format_eval_summary(r).find("0.8333"), std::string::npos);
  auto c = fixtures::valid_catalog(2);
  c.rows[1].source_url.clear();
  const auto v = format_validation(validate_catalog(c));
  EXPECT_NE(v.find("E_MISSING_SOURCE"), std::string::npos);
  EXPECT_NE(v.find("row 2"), std::string::npos) << v;
  const auto a = format_agreement(agreement_from_confusion({{45, 5}, {5, 45}}));
  EXPECT_NE(a.find("0.8"), std::string::npos) << a;
}

#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "spcgen/error.hpp"
#include "spcgen/prompt.hpp"
#include "spcgen/table_io.hpp"
#include "spcgen/text.hpp"

using namespace spcgen;

namespace {

ReferenceDoc toolbox_doc() {
  ReferenceDoc d;
  d.id = "toolbox-fn";
  d.title = "Toolbox Beschaffung: Möbel";
  d.source_tag = ReferenceSource::kToolbox;
  d.content = "Holz aus nachhaltiger Forstwirtschaft.";
  return d;
}

std::string section_body(const std::string& prompt, const std::string& name) {
  const auto marker = "== " + name + " ==\n";
  const auto start = prompt.find(marker);
  if (start == std::string::npos) return "<missing>";
  const auto body = start + marker.size();
  const auto next = prompt.find("\n\n== ", body);
  return prompt.substr(body, next == std::string::npos ? std::string::npos : next - body);
}

}  // namespace

TEST(Template, ParseFormat) {
  const auto t = parse_template(
      "# comment\nname: demo\nversion: 2.1\nlanguage: en\n== A ==\nhello {who}\n\n== B ==\n{{literal}} {n}\n");
  EXPECT_EQ(t.name, "demo");
  EXPECT_EQ(t.version, "2.1");
  EXPECT_EQ(t.language, "en");
  ASSERT_EQ(t.sections.size(), 2u);
  EXPECT_EQ(t.sections[0].name, "A");
  EXPECT_EQ(t.placeholders, (std::set<std::string>{"who", "n"}));
  EXPECT_EQ(render_template(t, {{"who", "you"}, {"n", "{x}"}}), "== A ==\nhello you\n\n== B ==\n{literal} {x}\n");
}

TEST(Template, Errors) {
  EXPECT_THROW(parse_template("name: x\n"), Error);
  EXPECT_THROW(parse_template("== A ==\nx\n== A ==\ny\n"), Error);
  EXPECT_THROW(parse_template("colour: red\n== A ==\n"), Error);
  try {
    require_generation_sections(parse_template("== Background ==\nx\n"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kBadTemplate);
    EXPECT_NE(std::string(e.what()).find("Problem"), std::string::npos);
  }
}

TEST(Template, BundledTemplatesLoad) {
  const auto names = bundled_template_names();
  for (const char* n : {"generation_de", "generation_en", "judge_en", "judge_de"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), n), names.end()) << n;
  }
  for (const auto& n : names) {
    const auto t = bundled_template(n);
    if (n.rfind("generation", 0) == 0) EXPECT_NO_THROW(require_generation_sections(t));
  }
  EXPECT_EQ(default_generation_template().language, "de");
  EXPECT_EQ(default_generation_template("en").name, "generation_en");
}

TEST(Template, UnboundPlaceholderIsNamed) {
  GenerationRequest req;
  req.model_id = "m";
  try {
    build_generation_prompt(req);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kUnboundPlaceholder);
    EXPECT_NE(std::string(e.what()).find("{sector}"), std::string::npos);
  }
}

TEST(Template, RenderingDoesNotRescanValues) {
  EXPECT_EQ(render_text("{a}", {{"a", "{b}"}}), "{b}");
  EXPECT_EQ(find_placeholders("{a} {{b}} {c} {a}"), (std::vector<std::string>{"a", "c"}));
}

TEST(GenerationPrompt, ToolboxReferenceInInputs) {
  GenerationRequest req;
  req.sector = Sector::kFN;
  req.references.push_back(toolbox_doc());
  const auto prompt = build_generation_prompt(req);
  const auto inputs = section_body(prompt, "Inputs");
  EXPECT_NE(inputs.find("Toolbox Beschaffung: Möbel"), std::string::npos);
  EXPECT_NE(inputs.find("Holz aus nachhaltiger Forstwirtschaft."), std::string::npos);
  EXPECT_NE(prompt.find(std::string(display_name(Sector::kFN, "de"))), std::string::npos);
}

TEST(GenerationPrompt, AttachmentsListedByTitleOnly) {
  GenerationRequest req;
  req.sector = Sector::kFN;
  ReferenceDoc d;
  d.id = "eu";
  d.title = "EU GPP furniture";
  d.provider_file_id = "file-abc";
  req.references.push_back(d);
  const auto prompt = build_generation_prompt(req);
  EXPECT_NE(prompt.find("EU GPP furniture"), std::string::npos);
  EXPECT_EQ(prompt.find("file-abc"), std::string::npos);
}

TEST(GenerationPrompt, EmptyInputsStillHasAllSections) {
  GenerationRequest req;
  req.sector = Sector::kNT;
  const auto prompt = build_generation_prompt(req);
  for (auto name : kGenerationSections) {
    EXPECT_NE(prompt.find("== " + std::string(name) + " =="), std::string::npos) << name;
  }
  EXPECT_TRUE(text::trim(section_body(prompt, "Inputs")).empty());
}

TEST(GenerationPrompt, ExamplesTruncatedToFiveRows) {
  GenerationRequest req;
  req.sector = Sector::kFN;
  req.one_shot_examples = fixtures::valid_catalog(8);
  const auto prompt = build_generation_prompt(req);
  const auto table = parse_latex_table(section_body(prompt, "Inputs"), Sector::kFN);
  ASSERT_EQ(table.catalog.rows.size(), 5u);
  EXPECT_EQ(table.catalog.rows[4], req.one_shot_examples->rows[4]);
}

TEST(GenerationPrompt, DeterministicOrderedAndFullyBound) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    GenerationRequest req;
    req.sector = kAllSectors[rng() % kAllSectors.size()];
    req.prompt_template = default_generation_template(rng() % 2 ? "de" : "en");
    if (rng() % 2) req.references.push_back(toolbox_doc());
    if (rng() % 2) req.one_shot_examples = fixtures::random_valid_catalog(rng, 1, 8);
    const auto a = build_generation_prompt(req);
    EXPECT_EQ(a, build_generation_prompt(req));
    for (const auto& [name, value] : generation_bindings(req)) {
      EXPECT_EQ(a.find("{" + name + "}"), std::string::npos) << name;
    }
    std::size_t pos = 0;
    for (const auto& s : req.prompt_template.sections) {
      const auto at = a.find("== " + s.name + " ==", pos);
      ASSERT_NE(at, std::string::npos) << s.name;
      pos = at;
    }
  }
}

TEST(GenerationPrompt, VariablesOverrideDerived) {
  GenerationRequest req;
  req.sector = Sector::kFN;
  req.variables["min_areas"] = "25";
  const auto prompt = build_generation_prompt(req);
  EXPECT_NE(prompt.find("mindestens 25 verschiedene"), std::string::npos);
}

TEST(Reference, ExactlyOneOfContentAndFile) {
  ReferenceDoc d;
  d.id = "x";
  d.title = "T";
  EXPECT_THROW(check_reference(d), Error);
  d.content = "c";
  EXPECT_NO_THROW(check_reference(d));
  d.provider_file_id = "f";
  EXPECT_THROW(check_reference(d), Error);
  d.provider_file_id.reset();
  d.title = " ";
  EXPECT_THROW(check_reference(d), Error);
}

TEST(Request, Defaults) {
  EXPECT_EQ(default_sample_count("gpt-4o"), 10u);
  EXPECT_EQ(default_sample_count("gpt-4o-2024-08-06"), 10u);
  EXPECT_EQ(default_sample_count("gpt-4o-mini"), 1u);
  EXPECT_EQ(default_sample_count("o3"), 1u);
  GenerationRequest req;
  req.sector = Sector::kFN;
  req.max_attempts = 0;
  EXPECT_THROW(check_request(req), Error);
  req.max_attempts = 5;
  req.sample_count = 0;
  EXPECT_THROW(check_request(req), Error);
}

TEST(JudgePrompt, ContainsRubricAndRow) {
  const auto c = parse_latex_table(fixtures::furniture_example_latex(true), Sector::kFN).catalog;
  const auto p = build_judge_prompt(c.rows[0]);
  EXPECT_NE(p.find("Technical correctness and relevance"), std::string::npos);
  EXPECT_NE(p.find("scale from 1 (insufficient) to 5 (excellent)"), std::string::npos);
  EXPECT_NE(p.find("The supplier must implement a chemical management system"), std::string::npos);
}

TEST(JudgePrompt, RowsDifferOnlyInRowBlock) {
  const auto c = parse_latex_table(fixtures::furniture_example_latex(true), Sector::kFN).catalog;
  const auto a = build_judge_prompt(c.rows[0]);
  const auto b = build_judge_prompt(c.rows[1]);
  const auto ra = serialize_row(c.rows[0]);
  const auto rb = serialize_row(c.rows[1]);
  const auto ia = a.find(ra);
  ASSERT_NE(ia, std::string::npos);
  EXPECT_EQ(a.substr(0, ia), b.substr(0, ia));
  EXPECT_EQ(a.substr(ia + ra.size()), b.substr(ia + rb.size()));
}

TEST(JudgePrompt, SpecialCharactersExtractable) {
  SpcRow row = fixtures::valid_catalog(1).rows[0];
  row.criterion_text = "Mindestens 50% R&D-Anteil, $-Kosten #1 und snake_case {x}.";
  const auto p = build_judge_prompt(row);
  const auto back = parse_latex_table(p, Sector::kFN);
  ASSERT_EQ(back.catalog.rows.size(), 1u);
  EXPECT_EQ(back.catalog.rows[0], row);
}

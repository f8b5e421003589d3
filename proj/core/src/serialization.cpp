#include "spcgen/serialization.hpp"

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <system_error>

#include "spcgen/error.hpp"

namespace spcgen {
namespace {

template <typename F>
auto guarded(std::string_view what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(Errc::kSerialize, "bad " + std::string(what) + " JSON: " + e.what());
  }
}

std::string fixed(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

Sector sector_field(const json& j, const char* key) {
  const auto token = j.at(key).get<std::string>();
  const auto s = parse_sector(token);
  if (!s) throw Error(Errc::kSerialize, "unknown sector '" + token + "'");
  return *s;
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

json column_to_json(const ColumnScores& c) {
  return {{"quality", c.quality}, {"harmonic", c.harmonic}, {"matched_scores", c.matched_scores}};
}

ColumnScores column_from_json(const json& j) {
  ColumnScores c;
  c.quality = j.at("quality").get<double>();
  c.harmonic = j.at("harmonic").get<double>();
  c.matched_scores = j.at("matched_scores").get<std::vector<double>>();
  return c;
}

}  // namespace

json to_json(const SpcRow& row) {
  json extras = json::array();
  for (const auto& [k, v] : row.extras) extras.push_back({{"header", k}, {"value", v}});
  return {{"area_of_action", row.area_of_action},
          {"area_id", row.area_id},
          {"criterion_id", row.criterion_id},
          {"category", row.category},
          {"criterion_text", row.criterion_text},
          {"ambition",
           {{"basis", row.ambition.basis},
            {"good_practice", row.ambition.good_practice},
            {"exemplary", row.ambition.exemplary}}},
          {"source_url", row.source_url},
          {"extras", extras}};
}

json to_json(const SpcCatalog& catalog) {
  json rows = json::array();
  for (const auto& r : catalog.rows) rows.push_back(to_json(r));
  return {{"sector", code(catalog.sector)},
          {"source", code(catalog.source)},
          {"distinct_area_count", catalog.distinct_area_count()},
          {"rows", rows}};
}

SpcCatalog catalog_from_json(const json& j) {
  return guarded("catalog", [&] {
    SpcCatalog c;
    c.sector = sector_field(j, "sector");
    const auto src = j.at("source").get<std::string>();
    const auto parsed = parse_catalog_source(src);
    if (!parsed) throw Error(Errc::kSerialize, "unknown catalog source '" + src + "'");
    c.source = *parsed;
    for (const auto& r : j.at("rows")) {
      SpcRow row;
      row.area_of_action = r.at("area_of_action").get<std::string>();
      row.area_id = r.at("area_id").get<std::string>();
      row.criterion_id = r.at("criterion_id").get<std::string>();
      row.category = r.at("category").get<std::string>();
      row.criterion_text = r.at("criterion_text").get<std::string>();
      const auto& a = r.at("ambition");
      row.ambition.basis = a.at("basis").get<std::string>();
      row.ambition.good_practice = a.at("good_practice").get<std::string>();
      row.ambition.exemplary = a.at("exemplary").get<std::string>();
      row.source_url = r.value("source_url", std::string());
      if (auto it = r.find("extras"); it != r.end()) {
        for (const auto& e : *it) {
          row.extras.emplace_back(e.at("header").get<std::string>(), e.at("value").get<std::string>());
        }
      }
      c.rows.push_back(std::move(row));
    }
    return c;
  });
}

json to_json(const ValidationReport& report) {
  json errors = json::array();
  for (const auto& e : report.errors) {
    errors.push_back({{"row_index", e.row_index}, {"rule_id", e.rule_id}, {"message", e.message}});
  }
  json warnings = json::array();
  for (const auto& w : report.warnings) warnings.push_back({{"rule_id", w.rule_id}, {"message", w.message}});
  return {{"valid", report.is_valid()},
          {"distinct_area_count", report.distinct_area_count},
          {"errors", errors},
          {"warnings", warnings}};
}

ValidationReport validation_from_json(const json& j) {
  return guarded("validation", [&] {
    ValidationReport r;
    r.distinct_area_count = j.at("distinct_area_count").get<std::size_t>();
    for (const auto& e : j.at("errors")) {
      r.errors.push_back({e.at("row_index").get<std::size_t>(), e.at("rule_id").get<std::string>(),
                          e.at("message").get<std::string>()});
    }
    for (const auto& w : j.at("warnings")) {
      r.warnings.push_back({w.at("rule_id").get<std::string>(), w.at("message").get<std::string>()});
    }
    return r;
  });
}

json to_json(const AttemptRecord& record) {
  json j = {{"attempt_index", record.attempt_index},
            {"raw_output", record.raw_output},
            {"parse_ok", record.parse_ok},
            {"validation_ok", record.validation_ok},
            {"distinct_area_count", record.distinct_area_count},
            {"failure_reason", nullptr}};
  if (record.failure_reason) j["failure_reason"] = *record.failure_reason;
  return j;
}

AttemptRecord attempt_from_json(const json& j) {
  return guarded("attempt", [&] {
    AttemptRecord r;
    r.attempt_index = j.at("attempt_index").get<std::size_t>();
    r.raw_output = j.at("raw_output").get<std::string>();
    r.parse_ok = j.at("parse_ok").get<bool>();
    r.validation_ok = j.at("validation_ok").get<bool>();
    r.distinct_area_count = j.at("distinct_area_count").get<std::size_t>();
    r.failure_reason = optional_field<std::string>(j, "failure_reason");
    return r;
  });
}

json to_json(const EvalReport& report) {
  json pairs = json::array();
  for (const auto& p : report.pairs) {
    pairs.push_back({{"gn_index", p.gn_index},
                     {"gt_index", p.gt_index},
                     {"gn_id", p.gn_id},
                     {"gt_id", p.gt_id},
                     {"aa_score", p.aa_score},
                     {"spc_score", p.spc_score}});
  }
  return {{"scorer", report.scorer},
          {"gn_rows", report.gn_rows},
          {"gt_rows", report.gt_rows},
          {"raw_coverage", report.raw_coverage},
          {"coverage", report.coverage},
          {"aa", column_to_json(report.aa)},
          {"spc", column_to_json(report.spc)},
          {"pairs", pairs}};
}

EvalReport eval_report_from_json(const json& j) {
  return guarded("evaluation", [&] {
    EvalReport r;
    r.scorer = j.at("scorer").get<std::string>();
    r.gn_rows = j.at("gn_rows").get<std::size_t>();
    r.gt_rows = j.at("gt_rows").get<std::size_t>();
    r.raw_coverage = j.at("raw_coverage").get<double>();
    r.coverage = j.at("coverage").get<double>();
    r.aa = column_from_json(j.at("aa"));
    r.spc = column_from_json(j.at("spc"));
    for (const auto& p : j.at("pairs")) {
      MatchedPair m;
      m.gn_index = p.at("gn_index").get<std::size_t>();
      m.gt_index = p.at("gt_index").get<std::size_t>();
      m.gn_id = p.at("gn_id").get<std::string>();
      m.gt_id = p.at("gt_id").get<std::string>();
      m.aa_score = p.at("aa_score").get<double>();
      m.spc_score = p.at("spc_score").get<double>();
      r.pairs.push_back(std::move(m));
    }
    return r;
  });
}

json to_json(const JudgeVerdict& verdict) {
  json scores = json::object();
  json reasons = json::object();
  for (auto d : kAllDimensions) {
    scores[std::string(code(d))] = verdict.score(d);
    reasons[std::string(code(d))] = verdict.justifications[static_cast<std::size_t>(d)];
  }
  json j = {{"area_id", verdict.area_id},
            {"criterion_id", verdict.criterion_id},
            {"scores", scores},
            {"justifications", reasons},
            {"improvement", nullptr}};
  if (verdict.improvement) j["improvement"] = *verdict.improvement;
  return j;
}

JudgeVerdict verdict_from_json(const json& j) {
  return guarded("verdict", [&] {
    JudgeVerdict v;
    v.area_id = j.at("area_id").get<std::string>();
    v.criterion_id = j.at("criterion_id").get<std::string>();
    for (auto d : kAllDimensions) {
      const auto k = static_cast<std::size_t>(d);
      v.scores[k] = j.at("scores").at(std::string(code(d))).get<int>();
      v.justifications[k] = j.at("justifications").at(std::string(code(d))).get<std::string>();
    }
    v.improvement = optional_field<std::string>(j, "improvement");
    return v;
  });
}

json to_json(const JudgeSummary& summary) {
  json means = json::object();
  for (auto d : kAllDimensions) means[std::string(code(d))] = summary.mean(d);
  json failed = json::array();
  for (const auto& f : summary.failed_rows) failed.push_back({{"criterion_id", f.criterion_id}, {"reason", f.reason}});
  json verdicts = json::array();
  for (const auto& v : summary.verdicts) verdicts.push_back(to_json(v));
  return {{"means", means},
          {"row_count", summary.row_count},
          {"provider_calls", summary.provider_calls},
          {"failed_rows", failed},
          {"verdicts", verdicts}};
}

JudgeSummary judge_summary_from_json(const json& j) {
  return guarded("judge summary", [&] {
    JudgeSummary s;
    for (auto d : kAllDimensions) {
      s.means[static_cast<std::size_t>(d)] = j.at("means").at(std::string(code(d))).get<double>();
    }
    s.row_count = j.at("row_count").get<std::size_t>();
    s.provider_calls = j.value("provider_calls", std::size_t{0});
    for (const auto& f : j.at("failed_rows")) {
      s.failed_rows.push_back({f.at("criterion_id").get<std::string>(), f.at("reason").get<std::string>()});
    }
    for (const auto& v : j.at("verdicts")) s.verdicts.push_back(verdict_from_json(v));
    return s;
  });
}

json to_json(const AgreementStats& stats) {
  json labels = json::array();
  for (auto l : kAllLabels) labels.push_back(code(l));
  json confusion = json::array();
  for (const auto& row : stats.confusion) confusion.push_back(row);
  return {{"n_items", stats.n_items},
          {"percent_agreement", stats.percent_agreement},
          {"kappa", stats.kappa ? json(*stats.kappa) : json(nullptr)},
          {"kappa_defined", stats.kappa.has_value()},
          {"labels", labels},
          {"confusion", confusion}};
}

json to_json(const ReviewQueue& queue) {
  json candidates = json::array();
  for (const auto& c : queue.candidates) {
    candidates.push_back({{"gt_index", c.gt_index}, {"criterion_id", c.criterion_id}, {"score", c.score}});
  }
  return {{"gn_id", queue.gn_id}, {"empty_after_filter", queue.empty_after_filter}, {"candidates", candidates}};
}

json to_json(const ReferenceDoc& doc, bool with_content) {
  json j = {{"id", doc.id},
            {"title", doc.title},
            {"source_tag", code(doc.source_tag)},
            {"attachment", doc.is_attachment()},
            {"provider_file_id", doc.provider_file_id ? json(*doc.provider_file_id) : json(nullptr)}};
  if (with_content) j["content"] = doc.content ? json(*doc.content) : json(nullptr);
  return j;
}

ReferenceDoc reference_from_json(const json& j) {
  return guarded("reference", [&] {
    ReferenceDoc d;
    d.id = j.value("id", std::string());
    d.title = j.at("title").get<std::string>();
    const auto tag = j.value("source_tag", std::string("EU_GPP"));
    const auto parsed = parse_reference_source(tag);
    if (!parsed) throw Error(Errc::kSerialize, "unknown source tag '" + tag + "'");
    d.source_tag = *parsed;
    d.content = optional_field<std::string>(j, "content");
    d.provider_file_id = optional_field<std::string>(j, "provider_file_id");
    return d;
  });
}

json to_json(const RunManifest& m) {
  return {{"run_id", m.run_id},
          {"created_at", m.created_at},
          {"sector", code(m.sector)},
          {"model_id", m.model_id},
          {"template_name", m.template_name},
          {"template_version", m.template_version},
          {"reference_ids", m.reference_ids},
          {"status", code(m.status)},
          {"artifact_paths", m.artifact_paths},
          {"error", m.error ? json(*m.error) : json(nullptr)},
          {"provider_calls", m.provider_calls},
          {"selected_sample", m.selected_sample ? json(*m.selected_sample) : json(nullptr)}};
}

RunManifest manifest_from_json(const json& j) {
  return guarded("manifest", [&] {
    RunManifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.created_at = j.at("created_at").get<std::string>();
    m.sector = sector_field(j, "sector");
    m.model_id = j.at("model_id").get<std::string>();
    m.template_name = j.at("template_name").get<std::string>();
    m.template_version = j.at("template_version").get<std::string>();
    m.reference_ids = j.at("reference_ids").get<std::vector<std::string>>();
    const auto status = j.at("status").get<std::string>();
    const auto parsed = parse_run_status(status);
    if (!parsed) throw Error(Errc::kSerialize, "unknown run status '" + status + "'");
    m.status = *parsed;
    m.artifact_paths = j.at("artifact_paths").get<std::map<std::string, std::string>>();
    m.error = optional_field<std::string>(j, "error");
    m.provider_calls = j.value("provider_calls", std::size_t{0});
    m.selected_sample = optional_field<std::size_t>(j, "selected_sample");
    return m;
  });
}

json to_json(const RunRequest& r) {
  json j = {{"sector", code(r.sector)},
            {"model_id", r.model_id},
            {"template", r.template_name},
            {"language", r.language},
            {"reference_ids", r.reference_ids},
            {"max_attempts", r.max_attempts},
            {"retry_with_feedback", r.retry_with_feedback},
            {"variables", r.variables}};
  if (r.template_text) j["template_text"] = *r.template_text;
  if (r.example_run_id) j["example_run_id"] = *r.example_run_id;
  if (r.sample_count) j["sample_count"] = *r.sample_count;
  return j;
}

RunRequest run_request_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::kInvalidArgument, "run request must be a JSON object");
  return guarded("run request", [&] {
    RunRequest r;
    const auto sector = j.at("sector").get<std::string>();
    const auto parsed = parse_sector(sector);
    if (!parsed) throw Error(Errc::kInvalidArgument, "unknown sector '" + sector + "'");
    r.sector = *parsed;
    r.model_id = j.at("model_id").get<std::string>();
    r.template_name = j.value("template", std::string());
    r.template_text = optional_field<std::string>(j, "template_text");
    r.language = j.value("language", std::string("de"));
    if (r.language != "de" && r.language != "en") {
      throw Error(Errc::kInvalidArgument, "unsupported language '" + r.language + "'");
    }
    r.reference_ids = j.value("reference_ids", std::vector<std::string>{});
    r.example_run_id = optional_field<std::string>(j, "example_run_id");
    r.sample_count = optional_field<std::size_t>(j, "sample_count");
    r.max_attempts = j.value("max_attempts", std::size_t{5});
    r.retry_with_feedback = j.value("retry_with_feedback", false);
    r.variables = j.value("variables", std::map<std::string, std::string>{});
    return r;
  });
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::kSerialize, std::string("invalid JSON: ") + e.what());
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_json(buf.str());
}

void write_text_atomic(const std::filesystem::path& path, std::string_view text) {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  auto tmp = path;
  tmp += ".tmp-" + std::to_string(rng() % 1000000000ULL);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::kIo, "cannot write " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw Error(Errc::kIo, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(Errc::kIo, "cannot replace " + path.string());
  }
}

void write_json_atomic(const std::filesystem::path& path, const json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

std::string format_eval_summary(const EvalReport& r) {
  std::string out;
  out += "scorer      " + r.scorer + "\n";
  out += "rows        gn=" + std::to_string(r.gn_rows) + " gt=" + std::to_string(r.gt_rows) + " matched=" +
         std::to_string(r.pairs.size()) + "\n";
  out += "coverage    " + fixed(r.coverage) + " (raw " + fixed(r.raw_coverage) + ")\n";
  out += "AA  quality " + fixed(r.aa.quality) + "  harmonic " + fixed(r.aa.harmonic) + "\n";
  out += "SPC quality " + fixed(r.spc.quality) + "  harmonic " + fixed(r.spc.harmonic) + "\n";
  return out;
}

std::string format_judge_summary(const JudgeSummary& s) {
  std::string out = "judged rows " + std::to_string(s.row_count) + ", failed " +
                    std::to_string(s.failed_rows.size()) + ", calls " + std::to_string(s.provider_calls) + "\n";
  for (auto d : kAllDimensions) out += std::string(code(d)) + "  " + fixed(s.mean(d), 2) + "\n";
  for (const auto& f : s.failed_rows) out += "failed " + f.criterion_id + ": " + f.reason + "\n";
  return out;
}

std::string format_agreement(const AgreementStats& s) {
  std::string out = "items      " + std::to_string(s.n_items) + "\n";
  out += "agreement  " + fixed(s.percent_agreement * 100.0, 2) + "%\n";
  out += "kappa      " + (s.kappa ? fixed(*s.kappa, 3) : std::string("undefined")) + "\n";
  return out;
}

std::string format_validation(const ValidationReport& r) {
  std::string out = r.is_valid() ? "valid" : "invalid";
  out += ", " + std::to_string(r.distinct_area_count) + " distinct areas\n";
  for (const auto& e : r.errors) {
    out += "  row " + std::to_string(e.row_index + 1) + " " + e.rule_id + ": " + e.message + "\n";
  }
  for (const auto& w : r.warnings) out += "  " + w.rule_id + ": " + w.message + "\n";
  return out;
}

}  // namespace spcgen

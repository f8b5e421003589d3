// spcgen command-line front end.

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "spcgen/annotate.hpp"
#include "spcgen/api_server.hpp"
#include "spcgen/catalog.hpp"
#include "spcgen/error.hpp"
#include "spcgen/judge.hpp"
#include "spcgen/matching.hpp"
#include "spcgen/run_store.hpp"
#include "spcgen/scoring.hpp"
#include "spcgen/serialization.hpp"
#include "spcgen/table_io.hpp"

namespace fs = std::filesystem;
using namespace spcgen;

namespace {

struct ProviderFlags {
  std::string endpoint = "https://api.openai.com/v1";
  std::string api_key_env = "OPENAI_API_KEY";
  std::size_t parallel = 4;
  long timeout_ms = 120000;
  long retry_base_ms = 1000;
};

void add_provider_flags(CLI::App* cmd, ProviderFlags& f) {
  cmd->add_option("--endpoint", f.endpoint, "OpenAI-compatible base URL, or mock:<script.json>")
      ->capture_default_str();
  cmd->add_option("--api-key-env", f.api_key_env, "Environment variable holding the API key")
      ->capture_default_str();
  cmd->add_option("--parallel", f.parallel, "Concurrent provider calls")->capture_default_str();
  cmd->add_option("--timeout-ms", f.timeout_ms, "Per-request timeout")->capture_default_str();
  cmd->add_option("--retry-base-ms", f.retry_base_ms, "First backoff delay; 0 disables waiting")
      ->capture_default_str();
}

ProviderConfig provider_config(const ProviderFlags& f, std::string model) {
  ProviderConfig c;
  c.endpoint_url = f.endpoint;
  c.api_key_env = f.api_key_env;
  c.model_id = std::move(model);
  c.max_parallel = f.parallel;
  c.request_timeout = std::chrono::milliseconds(f.timeout_ms);
  check_config(c);
  return c;
}

RetryPolicy retry_policy(const ProviderFlags& f) {
  if (f.retry_base_ms <= 0) return RetryPolicy::none();
  RetryPolicy p;
  p.base_delay = std::chrono::milliseconds(f.retry_base_ms);
  return p;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(Errc::kIo, "write failed for " + path.string());
}

std::optional<Sector> sector_option(const std::string& token) {
  if (token.empty()) return std::nullopt;
  auto s = parse_sector(token);
  if (!s) throw Error(Errc::kInvalidArgument, "unknown sector '" + token + "'");
  return s;
}

bool is_run_dir(const fs::path& p) { return fs::is_directory(p) && fs::exists(p / "manifest.json"); }

std::string ext_of(const fs::path& p) {
  auto e = p.extension().string();
  for (char& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return e;
}

std::string run_id_of(const fs::path& run_dir) {
  auto p = run_dir.lexically_normal();
  if (p.filename().empty()) p = p.parent_path();
  return p.filename().string();
}

// Catalog from a run directory, workbook, JSON dump, or LaTeX table.
SpcCatalog load_catalog(const fs::path& path, std::optional<Sector> sector, CatalogSource source) {
  if (is_run_dir(path)) {
    RunStore store(store_root_of(path));
    return store.load_catalog(run_id_of(path));
  }
  if (!fs::exists(path)) throw Error(Errc::kIo, "no such file: " + path.string());
  const auto ext = ext_of(path);
  if (ext == ".xlsx") {
    XlsxImportOptions opts;
    opts.sector = sector;
    auto parsed = import_xlsx(path, opts);
    if (!parsed.diagnostics.row_failures.empty()) {
      spdlog::warn("{}: {} row(s) skipped", path.string(), parsed.diagnostics.row_failures.size());
    }
    return parsed.catalog;
  }
  if (ext == ".json") return catalog_from_json(read_json_file(path));
  if (!sector) throw Error(Errc::kInvalidArgument, "--sector is required for " + path.string());
  auto parsed = parse_latex_table(read_file(path), *sector, source);
  return parsed.catalog;
}

// Reference files become inline documents; workbooks are rendered as LaTeX.
ReferenceDoc reference_from_file(const fs::path& path, ReferenceSource tag, std::optional<Sector> sector) {
  ReferenceDoc doc;
  doc.title = path.stem().string();
  doc.source_tag = tag;
  if (ext_of(path) == ".xlsx") {
    XlsxImportOptions opts;
    opts.sector = sector;
    doc.content = render_latex_table(import_xlsx(path, opts).catalog);
  } else {
    doc.content = read_file(path);
  }
  return doc;
}

int exit_for_token(std::string_view message) {
  for (int i = 0; i <= static_cast<int>(Errc::kRunNotSucceeded); ++i) {
    const auto code = static_cast<Errc>(i);
    const auto token = to_string(code);
    if (message.substr(0, token.size()) == token) return exit_code_for(code);
  }
  return 1;
}

void print_json_or_text(const std::string& report_path, const json& j, const std::string& text) {
  if (!report_path.empty()) {
    write_file(report_path, j.dump(2) + "\n");
    std::cout << "report written to " << report_path << "\n";
  }
  std::cout << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate and evaluate sustainable procurement criteria catalogs"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress");

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a catalog into a run store");
  std::string g_sector, g_model, g_template, g_language = "de", g_tag = "EU_GPP";
  std::vector<std::string> g_refs;
  std::optional<std::size_t> g_samples;
  std::size_t g_attempts = 5;
  bool g_feedback = false;
  std::string g_out = "spcgen-store";
  ProviderFlags g_provider;
  gen->add_option("--sector", g_sector, "Sector code (NT, FN, LM, TS, CS, PS, CD)")->required();
  gen->add_option("--model", g_model, "Model id")->required();
  gen->add_option("--reference", g_refs, "Reference document (text, LaTeX, or .xlsx)")->expected(0, -1);
  gen->add_option("--reference-tag", g_tag, "Source tag of the references")->capture_default_str();
  gen->add_option("--template", g_template, "Template file or bundled template name");
  gen->add_option("--language", g_language, "Prompt language of the default template")->capture_default_str();
  gen->add_option("--samples", g_samples, "Independent samples (default depends on the model)");
  gen->add_option("--attempts", g_attempts, "Attempts per sample")->capture_default_str();
  gen->add_flag("--feedback", g_feedback, "Append the previous failure to retried prompts");
  gen->add_option("--out", g_out, "Run store directory")->capture_default_str();
  add_provider_flags(gen, g_provider);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Match a generated catalog against a gold catalog");
  std::string e_generated, e_gold, e_scorer = "lexical", e_report, e_sector, e_embed = "hash:", e_embed_model;
  ev->add_option("--generated", e_generated, "Run directory, .xlsx, .json, or LaTeX file")->required();
  ev->add_option("--gold", e_gold, "Gold catalog (.xlsx, .json, or LaTeX)")->required();
  ev->add_option("--scorer", e_scorer, "lexical, embed, or token-align")->capture_default_str();
  ev->add_option("--report", e_report, "Write the JSON report here");
  ev->add_option("--sector", e_sector, "Sector for files that do not record one");
  ev->add_option("--embed-endpoint", e_embed, "hash:[dim] or an embeddings API base URL")->capture_default_str();
  ev->add_option("--embed-model", e_embed_model, "Embedding model id");
  std::string e_embed_key = "OPENAI_API_KEY";
  ev->add_option("--embed-api-key-env", e_embed_key, "Environment variable holding the embeddings key")
      ->capture_default_str();

  // judge
  auto* jd = app.add_subcommand("judge", "Score every row of a catalog with a judge model");
  std::string j_catalog, j_model, j_report, j_sector, j_language = "en";
  std::size_t j_retries = 3;
  ProviderFlags j_provider;
  jd->add_option("--catalog", j_catalog, "Run directory, .xlsx, .json, or LaTeX file")->required();
  jd->add_option("--model", j_model, "Judge model id")->required();
  jd->add_option("--report", j_report, "Write the JSON summary here");
  jd->add_option("--sector", j_sector, "Sector for files that do not record one");
  jd->add_option("--language", j_language, "Judge prompt language (en, de)")->capture_default_str();
  jd->add_option("--retries", j_retries, "Extra calls per row after a failure")->capture_default_str();
  add_provider_flags(jd, j_provider);

  // import
  auto* im = app.add_subcommand("import", "Read a workbook or LaTeX table and write catalog JSON");
  std::string i_in, i_out, i_sector;
  im->add_option("input", i_in, "Workbook or LaTeX file")->required();
  im->add_option("--out", i_out, "Catalog JSON path (stdout when omitted)");
  im->add_option("--sector", i_sector, "Sector override");

  // export
  auto* ex = app.add_subcommand("export", "Write a catalog as .xlsx with a .csv beside it");
  std::string x_in, x_out, x_sector;
  ex->add_option("input", x_in, "Run directory, .json, .xlsx, or LaTeX file")->required();
  ex->add_option("--out", x_out, "Workbook path")->required();
  ex->add_option("--sector", x_sector, "Sector for files that do not record one");

  // validate
  auto* va = app.add_subcommand("validate", "Check a catalog against the schema rules");
  std::string v_in, v_sector;
  va->add_option("input", v_in, "Run directory, .json, .xlsx, or LaTeX file")->required();
  va->add_option("--sector", v_sector, "Sector for files that do not record one");

  // kappa
  auto* kp = app.add_subcommand("kappa", "Agreement between two annotation sheets");
  std::string k_a, k_b, k_report;
  kp->add_option("--a", k_a, "First annotation CSV")->required();
  kp->add_option("--b", k_b, "Second annotation CSV")->required();
  kp->add_option("--report", k_report, "Write the JSON statistics here");

  // review-queue
  auto* rq = app.add_subcommand("review-queue", "Ranked gold candidates per generated row, as annotation CSV");
  std::string r_generated, r_gold, r_scorer = "embed", r_out, r_sector, r_embed = "hash:";
  bool r_filter = false;
  rq->add_option("--generated", r_generated, "Generated catalog")->required();
  rq->add_option("--gold", r_gold, "Gold catalog")->required();
  rq->add_option("--scorer", r_scorer, "lexical, embed, or token-align")->capture_default_str();
  rq->add_option("--embed-endpoint", r_embed, "hash:[dim] or an embeddings API base URL")->capture_default_str();
  rq->add_flag("--aa-filter", r_filter, "Only list gold rows from the same area of action");
  rq->add_option("--out", r_out, "CSV path (stdout when omitted)");
  rq->add_option("--sector", r_sector, "Sector for files that do not record one");

  // serve
  auto* sv = app.add_subcommand("serve", "Run the HTTP API over a run store");
  std::string s_store = "spcgen-store", s_host = "127.0.0.1";
  int s_port = 8080;
  std::size_t s_runs = 2;
  ProviderFlags s_provider;
  sv->add_option("--store", s_store, "Run store directory")->capture_default_str();
  sv->add_option("--host", s_host, "Bind address")->capture_default_str();
  sv->add_option("--port", s_port, "Port (0 picks a free one)")->capture_default_str();
  sv->add_option("--max-runs", s_runs, "Runs executing at once")->capture_default_str();
  add_provider_flags(sv, s_provider);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);

  try {
    if (*gen) {
      const auto sector = sector_option(g_sector);
      const auto tag = parse_reference_source(g_tag);
      if (!tag) throw Error(Errc::kInvalidArgument, "unknown reference tag '" + g_tag + "'");
      RunStoreOptions opts;
      opts.provider = provider_config(g_provider, g_model);
      opts.retry = retry_policy(g_provider);
      RunStore store(g_out, opts);

      RunRequest req;
      req.sector = *sector;
      req.model_id = g_model;
      req.language = g_language;
      req.sample_count = g_samples;
      req.max_attempts = g_attempts;
      req.retry_with_feedback = g_feedback;
      if (!g_template.empty()) {
        if (fs::exists(g_template)) req.template_text = read_file(g_template);
        else req.template_name = g_template;
      }
      for (const auto& ref : g_refs) {
        req.reference_ids.push_back(store.register_reference(reference_from_file(ref, *tag, sector)).id);
      }
      const auto id = store.create_run(req);
      const auto m = store.wait(id);
      std::cout << "run " << id << " " << code(m.status) << "\n";
      std::cout << "dir " << store.run_dir(id).string() << "\n";
      std::cout << "provider calls " << m.provider_calls << "\n";
      if (m.status != RunStatus::kSucceeded) {
        std::cerr << "error: " << m.error.value_or("run failed") << "\n";
        return exit_for_token(m.error.value_or(""));
      }
      const auto report = validation_from_json(read_json_file(store.run_dir(id) / "validation.json"));
      std::cout << format_validation(report);
      return 0;
    }

    if (*ev) {
      const auto sector = sector_option(e_sector);
      const auto kind = parse_scorer_kind(e_scorer);
      if (!kind) throw Error(Errc::kInvalidArgument, "unknown scorer '" + e_scorer + "'");
      RunStoreOptions opts;
      opts.embedding.endpoint = e_embed;
      opts.embedding.api_key_env = e_embed_key;
      if (!e_embed_model.empty()) opts.embedding.model = e_embed_model;
      EvalReport report;
      if (is_run_dir(e_generated)) {
        RunStore store(store_root_of(e_generated), opts);
        const auto id = run_id_of(e_generated);
        const auto run_sector = store.get_run(id).sector;
        const auto gold = load_catalog(e_gold, sector ? sector : run_sector, CatalogSource::kExpert);
        report = store.attach_evaluation(id, gold, *kind);
      } else {
        const auto generated = load_catalog(e_generated, sector, CatalogSource::kGenerated);
        const auto gold = load_catalog(e_gold, sector ? sector : generated.sector, CatalogSource::kExpert);
        auto scorer = make_scorer(*kind, opts.embedding);
        report = evaluate_tables(generated, gold, *scorer);
      }
      print_json_or_text(e_report, to_json(report), format_eval_summary(report));
      return 0;
    }

    if (*jd) {
      const auto sector = sector_option(j_sector);
      JudgeOptions judge;
      judge.prompt_template = default_judge_template(j_language);
      judge.max_retries = j_retries;
      judge.max_parallel = j_provider.parallel;
      judge.retry = retry_policy(j_provider);
      JudgeSummary summary;
      if (is_run_dir(j_catalog)) {
        RunStoreOptions opts;
        opts.provider = provider_config(j_provider, j_model);
        opts.judge = judge;
        RunStore store(store_root_of(j_catalog), opts);
        summary = store.attach_judging(run_id_of(j_catalog), j_model);
      } else {
        const auto catalog = load_catalog(j_catalog, sector, CatalogSource::kGenerated);
        auto client = make_chat_client(provider_config(j_provider, j_model));
        summary = judge_catalog(catalog, *client, judge);
      }
      print_json_or_text(j_report, to_json(summary), format_judge_summary(summary));
      return 0;
    }

    if (*im) {
      const auto sector = sector_option(i_sector);
      TableParseResult parsed;
      if (ext_of(i_in) == ".xlsx") {
        XlsxImportOptions opts;
        opts.sector = sector;
        parsed = import_xlsx(i_in, opts);
      } else {
        if (!sector) throw Error(Errc::kInvalidArgument, "--sector is required for LaTeX input");
        parsed = parse_latex_table(read_file(i_in), *sector, CatalogSource::kExpert);
      }
      for (const auto& f : parsed.diagnostics.row_failures) {
        std::cerr << "row " << f.source_row_index + 1 << " skipped: " << f.reason << "\n";
      }
      const auto text = to_json(parsed.catalog).dump(2) + "\n";
      if (i_out.empty()) {
        std::cout << text;
      } else {
        write_file(i_out, text);
        std::cout << parsed.catalog.rows.size() << " rows written to " << i_out << "\n";
      }
      return 0;
    }

    if (*ex) {
      const auto catalog = load_catalog(x_in, sector_option(x_sector), CatalogSource::kGenerated);
      export_xlsx(catalog, x_out);
      std::cout << catalog.rows.size() << " rows written to " << x_out << "\n";
      return 0;
    }

    if (*va) {
      const auto catalog = load_catalog(v_in, sector_option(v_sector), CatalogSource::kGenerated);
      const auto report = validate_catalog(catalog);
      std::cout << format_validation(report);
      return report.is_valid() ? 0 : 2;
    }

    if (*kp) {
      const auto stats = compute_agreement(load_annotation_csv(k_a), load_annotation_csv(k_b));
      print_json_or_text(k_report, to_json(stats), format_agreement(stats));
      return 0;
    }

    if (*rq) {
      const auto sector = sector_option(r_sector);
      const auto kind = parse_scorer_kind(r_scorer);
      if (!kind) throw Error(Errc::kInvalidArgument, "unknown scorer '" + r_scorer + "'");
      const auto generated = load_catalog(r_generated, sector, CatalogSource::kGenerated);
      const auto gold = load_catalog(r_gold, sector ? sector : generated.sector, CatalogSource::kExpert);
      EmbeddingConfig embed;
      embed.endpoint = r_embed;
      auto scorer = make_scorer(*kind, embed);
      const auto csv_text = render_review_csv(build_review_queue(generated, gold, *scorer, r_filter));
      if (r_out.empty()) std::cout << csv_text;
      else write_file(r_out, csv_text);
      return 0;
    }

    if (*sv) {
      RunStoreOptions opts;
      opts.provider = provider_config(s_provider, "");
      opts.retry = retry_policy(s_provider);
      opts.max_concurrent_runs = s_runs;
      opts.recover_interrupted = true;
      opts.judge.retry = opts.retry;
      opts.judge.max_parallel = s_provider.parallel;
      RunStore store(s_store, opts);
      ApiServerOptions server_opts;
      server_opts.host = s_host;
      server_opts.port = s_port;
      ApiServer server(store, server_opts);
      const int port = server.bind();
      std::cout << "serving " << fs::absolute(s_store).string() << " on http://" << s_host << ":" << port
                << std::endl;
      server.listen();
      return 0;
    }
  } catch (const ExhaustedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

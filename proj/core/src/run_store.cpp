#include "spcgen/run_store.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <mutex>
#include <random>
#include <semaphore>
#include <set>
#include <sstream>
#include <thread>

#include "spcgen/error.hpp"
#include "spcgen/serialization.hpp"
#include "spcgen/table_io.hpp"
#include "spcgen/text.hpp"

namespace fs = std::filesystem;

namespace spcgen {
namespace {

constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kPromptFile = "prompt.txt";
constexpr const char* kAttemptsFile = "attempts/attempts.json";
constexpr const char* kCatalogXlsx = "catalog.xlsx";
constexpr const char* kCatalogCsv = "catalog.csv";
constexpr const char* kCatalogJson = "catalog.json";
constexpr const char* kValidationFile = "validation.json";

std::mt19937_64& rng() {
  thread_local std::mt19937_64 gen{std::random_device{}()};
  return gen;
}

std::string random_hex(std::size_t digits) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  auto bits = rng()();
  for (std::size_t i = 0; i < digits; ++i) {
    if (i % 16 == 0 && i) bits = rng()();
    out += kHex[bits & 0xF];
    bits >>= 4;
  }
  return out;
}

// Strictly increasing millisecond stamps within the process keep ids and
// creation times ordered even for runs created in the same millisecond.
std::chrono::sys_time<std::chrono::milliseconds> next_stamp() {
  static std::mutex m;
  static std::chrono::sys_time<std::chrono::milliseconds> last{};
  std::lock_guard lock(m);
  auto now = std::chrono::floor<std::chrono::milliseconds>(std::chrono::system_clock::now());
  if (now <= last) now = last + std::chrono::milliseconds(1);
  last = now;
  return now;
}

std::tm utc_tm(std::chrono::sys_time<std::chrono::milliseconds> t) {
  const std::time_t secs = std::chrono::system_clock::to_time_t(std::chrono::floor<std::chrono::seconds>(t));
  std::tm tm{};
  gmtime_r(&secs, &tm);
  return tm;
}

int millis_of(std::chrono::sys_time<std::chrono::milliseconds> t) {
  return static_cast<int>((t.time_since_epoch() % std::chrono::seconds(1)).count());
}

std::string iso_timestamp(std::chrono::sys_time<std::chrono::milliseconds> t) {
  const auto tm = utc_tm(t);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, millis_of(t));
  return buf;
}

std::string compact_timestamp(std::chrono::sys_time<std::chrono::milliseconds> t) {
  const auto tm = utc_tm(t);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d%02d%02dT%02d%02d%02d%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, millis_of(t));
  return buf;
}

bool safe_id(std::string_view id) {
  if (id.empty() || id.size() > 80 || id.front() == '.') return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
  });
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void make_dirs(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error(Errc::kIo, "cannot create " + p.string() + ": " + ec.message());
}

// Next free `<stem>-N.json` in `dir`, N from 1.
std::string next_versioned(const fs::path& dir, std::string_view stem) {
  for (std::size_t n = 1;; ++n) {
    std::string name = std::string(stem) + "-" + std::to_string(n) + ".json";
    if (!fs::exists(dir / name)) return name;
  }
}

}  // namespace

std::string_view code(RunStatus s) {
  switch (s) {
    case RunStatus::kPending: return "PENDING";
    case RunStatus::kRunning: return "RUNNING";
    case RunStatus::kSucceeded: return "SUCCEEDED";
    case RunStatus::kFailed: return "FAILED";
  }
  return "PENDING";
}

std::optional<RunStatus> parse_run_status(std::string_view token) {
  for (auto s : {RunStatus::kPending, RunStatus::kRunning, RunStatus::kSucceeded, RunStatus::kFailed}) {
    if (text::iequals_ascii(token, code(s))) return s;
  }
  return std::nullopt;
}

fs::path store_root_of(const fs::path& run_dir) {
  auto p = run_dir.lexically_normal();
  if (p.filename().empty()) p = p.parent_path();
  return p.parent_path().parent_path();
}

struct RunStore::Impl {
  explicit Impl(RunStoreOptions opts)
      : options(std::move(opts)), slots(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, options.max_concurrent_runs))) {}

  RunStoreOptions options;
  fs::path runs_dir;
  fs::path refs_dir;

  mutable std::mutex registry_mutex;
  // Serializes manifest read-modify-write and versioned artifact naming.
  mutable std::mutex manifest_mutex;

  std::mutex active_mutex;
  std::condition_variable active_cv;
  std::set<std::string> active;
  std::vector<std::thread> workers;
  std::counting_semaphore<1024> slots;

  fs::path manifest_path(std::string_view id) const { return runs_dir / std::string(id) / kManifestFile; }

  RunManifest read_manifest(std::string_view id) const {
    if (!safe_id(id)) throw Error(Errc::kNotFound, "no run '" + std::string(id) + "'");
    const auto path = manifest_path(id);
    if (!fs::exists(path)) throw Error(Errc::kNotFound, "no run '" + std::string(id) + "'");
    return manifest_from_json(read_json_file(path));
  }

  template <typename F>
  RunManifest update_manifest(std::string_view id, F&& mutate) {
    std::lock_guard lock(manifest_mutex);
    auto m = read_manifest(id);
    mutate(m);
    write_json_atomic(manifest_path(id), to_json(m));
    return m;
  }

  json read_registry() const {
    const auto path = refs_dir / "registry.json";
    if (!fs::exists(path)) return json::array();
    return read_json_file(path);
  }

  void run_pipeline(const std::string& id, GenerationRequest req);
};

RunStore::RunStore(fs::path root, RunStoreOptions options)
    : root_(std::move(root)), impl_(std::make_unique<Impl>(std::move(options))) {
  impl_->runs_dir = root_ / "runs";
  impl_->refs_dir = root_ / "references";
  make_dirs(impl_->runs_dir);
  make_dirs(impl_->refs_dir);

  // Runs left unfinished by a previous process cannot resume.
  if (!impl_->options.recover_interrupted) return;
  for (const auto& entry : fs::directory_iterator(impl_->runs_dir)) {
    const auto name = entry.path().filename().string();
    if (!entry.is_directory()) continue;
    if (name.rfind(".tmp-", 0) == 0) {
      std::error_code ec;
      fs::remove_all(entry.path(), ec);
      continue;
    }
    if (!safe_id(name) || !fs::exists(entry.path() / kManifestFile)) continue;
    try {
      auto m = impl_->read_manifest(name);
      if (m.status == RunStatus::kPending || m.status == RunStatus::kRunning) {
        m.status = RunStatus::kFailed;
        m.error = "E_INTERRUPTED: run did not finish before the store was closed";
        write_json_atomic(impl_->manifest_path(name), to_json(m));
        spdlog::warn("run {} marked FAILED after interruption", name);
      }
    } catch (const Error& e) {
      spdlog::warn("skipping run {}: {}", name, e.what());
    }
  }
}

RunStore::~RunStore() {
  for (auto& t : impl_->workers) {
    if (t.joinable()) t.join();
  }
}

fs::path RunStore::run_dir(std::string_view run_id) const { return impl_->runs_dir / std::string(run_id); }

ReferenceDoc RunStore::register_reference(ReferenceDoc doc) {
  check_reference(doc);
  std::lock_guard lock(impl_->registry_mutex);
  auto registry = impl_->read_registry();
  std::set<std::string> ids;
  for (const auto& r : registry) ids.insert(r.value("id", std::string()));
  do {
    doc.id = "ref-" + random_hex(10);
  } while (ids.count(doc.id));
  if (doc.content) write_text_atomic(impl_->refs_dir / (doc.id + ".txt"), *doc.content);
  registry.push_back(to_json(doc, false));
  write_json_atomic(impl_->refs_dir / "registry.json", registry);
  spdlog::info("registered reference {} ({})", doc.id, doc.title);
  return doc;
}

std::vector<ReferenceDoc> RunStore::list_references() const {
  std::lock_guard lock(impl_->registry_mutex);
  std::vector<ReferenceDoc> out;
  for (const auto& r : impl_->read_registry()) out.push_back(reference_from_json(r));
  return out;
}

ReferenceDoc RunStore::get_reference(std::string_view id) const {
  std::lock_guard lock(impl_->registry_mutex);
  for (const auto& r : impl_->read_registry()) {
    if (r.value("id", std::string()) != id) continue;
    auto doc = reference_from_json(r);
    if (!doc.is_attachment()) doc.content = read_file(impl_->refs_dir / (doc.id + ".txt"));
    return doc;
  }
  throw Error(Errc::kUnknownReference, "reference '" + std::string(id) + "' is not registered");
}

std::string RunStore::create_run(const RunRequest& request) {
  if (text::trim(request.model_id).empty()) throw Error(Errc::kInvalidArgument, "model_id is required");

  GenerationRequest req;
  req.sector = request.sector;
  req.model_id = request.model_id;
  req.sample_count = request.sample_count;
  req.max_attempts = request.max_attempts;
  req.retry_with_feedback = request.retry_with_feedback;
  req.variables = request.variables;
  if (request.template_text) {
    req.prompt_template = parse_template(*request.template_text);
  } else if (!request.template_name.empty()) {
    try {
      req.prompt_template = bundled_template(request.template_name);
    } catch (const Error& e) {
      if (e.code() != Errc::kNotFound) throw;
      throw Error(Errc::kBadTemplate, "unknown template '" + request.template_name + "'");
    }
  } else {
    req.prompt_template = default_generation_template(request.language);
  }
  require_generation_sections(req.prompt_template);
  for (const auto& ref_id : request.reference_ids) req.references.push_back(get_reference(ref_id));
  if (request.example_run_id) req.one_shot_examples = load_catalog(*request.example_run_id);
  check_request(req);
  const std::string prompt = build_generation_prompt(req);

  const auto stamp = next_stamp();
  RunManifest m;
  m.run_id = compact_timestamp(stamp) + "-" + random_hex(6);
  m.created_at = iso_timestamp(stamp);
  m.sector = request.sector;
  m.model_id = request.model_id;
  m.template_name = req.prompt_template.name;
  m.template_version = req.prompt_template.version;
  m.reference_ids = request.reference_ids;
  m.status = RunStatus::kPending;
  m.artifact_paths[std::string(artifacts::kPrompt)] = kPromptFile;
  m.artifact_paths[std::string(artifacts::kAttempts)] = kAttemptsFile;

  // Populate under a hidden name, then publish with one rename.
  const auto staging = impl_->runs_dir / (".tmp-" + m.run_id);
  make_dirs(staging / "attempts");
  write_text_atomic(staging / kPromptFile, prompt);
  write_json_atomic(staging / kAttemptsFile, json::array());
  write_json_atomic(staging / kManifestFile, to_json(m));
  std::error_code ec;
  fs::rename(staging, run_dir(m.run_id), ec);
  if (ec) throw Error(Errc::kIo, "cannot publish run " + m.run_id + ": " + ec.message());
  spdlog::info("run {} created for sector {} with model {}", m.run_id, code(m.sector), m.model_id);

  {
    std::lock_guard lock(impl_->active_mutex);
    impl_->active.insert(m.run_id);
    impl_->workers.emplace_back([impl = impl_.get(), id = m.run_id, r = std::move(req)]() mutable {
      impl->run_pipeline(id, std::move(r));
    });
  }
  return m.run_id;
}

void RunStore::Impl::run_pipeline(const std::string& id, GenerationRequest req) {
  slots.acquire();
  const fs::path dir = runs_dir / id;
  try {
    update_manifest(id, [](RunManifest& m) { m.status = RunStatus::kRunning; });

    ProviderConfig config = options.provider;
    config.model_id = req.model_id;
    auto client = options.client_factory(config);

    std::mutex attempts_mutex;
    json attempts_log = json::array();
    GenerateOptions gen;
    gen.retry = options.retry;
    gen.max_parallel = std::max<std::size_t>(1, config.max_parallel);
    gen.on_attempt = [&](std::size_t sample, const AttemptRecord& record) {
      std::lock_guard lock(attempts_mutex);
      const auto name = "sample-" + std::to_string(sample) + "-attempt-" + std::to_string(record.attempt_index) + ".txt";
      write_text_atomic(dir / "attempts" / name, record.raw_output);
      auto entry = to_json(record);
      entry["sample_index"] = sample;
      entry["raw_output_path"] = "attempts/" + name;
      attempts_log.push_back(std::move(entry));
      write_json_atomic(dir / kAttemptsFile, attempts_log);
    };

    try {
      auto outcome = generate_catalog(req, *client, gen);
      export_xlsx(*outcome.catalog, dir / kCatalogXlsx);
      write_json_atomic(dir / kCatalogJson, to_json(*outcome.catalog));
      write_json_atomic(dir / kValidationFile, to_json(*outcome.validation));
      update_manifest(id, [&](RunManifest& m) {
        m.status = RunStatus::kSucceeded;
        m.provider_calls = outcome.provider_calls();
        m.selected_sample = outcome.selected_sample;
        m.artifact_paths[std::string(artifacts::kCatalog)] = kCatalogXlsx;
        m.artifact_paths[std::string(artifacts::kCatalogCsv)] = kCatalogCsv;
        m.artifact_paths[std::string(artifacts::kCatalogJson)] = kCatalogJson;
        m.artifact_paths[std::string(artifacts::kValidation)] = kValidationFile;
      });
      spdlog::info("run {} succeeded after {} provider calls", id, outcome.provider_calls());
    } catch (const ExhaustedError& e) {
      update_manifest(id, [&](RunManifest& m) {
        m.status = RunStatus::kFailed;
        m.error = e.what();
        m.provider_calls = e.outcome().provider_calls();
      });
      spdlog::warn("run {} failed: {}", id, e.what());
    }
  } catch (const std::exception& e) {
    spdlog::warn("run {} failed: {}", id, e.what());
    try {
      update_manifest(id, [&](RunManifest& m) {
        m.status = RunStatus::kFailed;
        m.error = e.what();
      });
    } catch (const std::exception& inner) {
      spdlog::error("run {}: cannot record failure: {}", id, inner.what());
    }
  }
  slots.release();
  {
    std::lock_guard lock(active_mutex);
    active.erase(id);
  }
  active_cv.notify_all();
}

RunManifest RunStore::wait(std::string_view run_id) {
  {
    std::unique_lock lock(impl_->active_mutex);
    const std::string id(run_id);
    impl_->active_cv.wait(lock, [&] { return !impl_->active.count(id); });
  }
  return get_run(run_id);
}

void RunStore::wait_all() {
  std::unique_lock lock(impl_->active_mutex);
  impl_->active_cv.wait(lock, [&] { return impl_->active.empty(); });
}

RunManifest RunStore::get_run(std::string_view run_id) const {
  std::lock_guard lock(impl_->manifest_mutex);
  return impl_->read_manifest(run_id);
}

std::vector<RunManifest> RunStore::list_runs(std::optional<Sector> sector, std::optional<RunStatus> status) const {
  std::vector<RunManifest> out;
  std::lock_guard lock(impl_->manifest_mutex);
  for (const auto& entry : fs::directory_iterator(impl_->runs_dir)) {
    const auto name = entry.path().filename().string();
    if (!entry.is_directory() || !safe_id(name)) continue;
    if (!fs::exists(entry.path() / kManifestFile)) continue;
    auto m = impl_->read_manifest(name);
    if (sector && m.sector != *sector) continue;
    if (status && m.status != *status) continue;
    out.push_back(std::move(m));
  }
  std::sort(out.begin(), out.end(), [](const RunManifest& a, const RunManifest& b) {
    if (a.created_at != b.created_at) return a.created_at > b.created_at;
    return a.run_id > b.run_id;
  });
  return out;
}

SpcCatalog RunStore::load_catalog(std::string_view run_id) const {
  const auto m = get_run(run_id);
  if (m.status != RunStatus::kSucceeded) {
    throw Error(Errc::kRunNotSucceeded, "run " + m.run_id + " is " + std::string(code(m.status)));
  }
  return catalog_from_json(read_json_file(run_dir(run_id) / m.artifact_paths.at(std::string(artifacts::kCatalogJson))));
}

std::string RunStore::load_catalog_xlsx(std::string_view run_id) const {
  const auto m = get_run(run_id);
  if (m.status != RunStatus::kSucceeded) {
    throw Error(Errc::kRunNotSucceeded, "run " + m.run_id + " is " + std::string(code(m.status)));
  }
  return read_file(run_dir(run_id) / m.artifact_paths.at(std::string(artifacts::kCatalog)));
}

std::vector<AttemptRecord> RunStore::load_attempts(std::string_view run_id) const {
  const auto m = get_run(run_id);
  std::vector<AttemptRecord> out;
  for (const auto& a : read_json_file(run_dir(run_id) / m.artifact_paths.at(std::string(artifacts::kAttempts)))) {
    out.push_back(attempt_from_json(a));
  }
  return out;
}

std::optional<EvalReport> RunStore::load_evaluation(std::string_view run_id) const {
  const auto m = get_run(run_id);
  auto it = m.artifact_paths.find(std::string(artifacts::kEval));
  if (it == m.artifact_paths.end()) return std::nullopt;
  return eval_report_from_json(read_json_file(run_dir(run_id) / it->second));
}

std::optional<JudgeSummary> RunStore::load_judging(std::string_view run_id) const {
  const auto m = get_run(run_id);
  auto it = m.artifact_paths.find(std::string(artifacts::kJudge));
  if (it == m.artifact_paths.end()) return std::nullopt;
  return judge_summary_from_json(read_json_file(run_dir(run_id) / it->second));
}

EvalReport RunStore::attach_evaluation(std::string_view run_id, const SpcCatalog& gold, ScorerKind scorer_kind) {
  const auto generated = load_catalog(run_id);
  auto scorer = make_scorer(scorer_kind, impl_->options.embedding);
  const auto report = evaluate_tables(generated, gold, *scorer);
  const fs::path dir = run_dir(run_id);
  std::lock_guard lock(impl_->manifest_mutex);
  const auto name = next_versioned(dir, "eval");
  write_json_atomic(dir / name, to_json(report));
  write_json_atomic(dir / (name.substr(0, name.size() - 5) + "-gold.json"), to_json(gold));
  auto m = impl_->read_manifest(run_id);
  m.artifact_paths[std::string(artifacts::kEval)] = name;
  write_json_atomic(impl_->manifest_path(run_id), to_json(m));
  spdlog::info("run {}: evaluation stored as {}", m.run_id, name);
  return report;
}

EvalReport RunStore::attach_evaluation(std::string_view run_id, const fs::path& gold_xlsx, ScorerKind scorer) {
  const auto m = get_run(run_id);
  XlsxImportOptions opts;
  TableParseResult gold;
  try {
    gold = import_xlsx(gold_xlsx, opts);
  } catch (const Error& e) {
    if (e.code() != Errc::kInvalidArgument) throw;
    opts.sector = m.sector;
    gold = import_xlsx(gold_xlsx, opts);
  }
  return attach_evaluation(run_id, gold.catalog, scorer);
}

JudgeSummary RunStore::attach_judging(std::string_view run_id, std::string model_id) {
  const auto catalog = load_catalog(run_id);
  const auto m = get_run(run_id);
  ProviderConfig config = impl_->options.provider;
  config.model_id = model_id.empty() ? m.model_id : std::move(model_id);
  auto client = impl_->options.client_factory(config);
  const auto summary = judge_catalog(catalog, *client, impl_->options.judge);
  const fs::path dir = run_dir(run_id);
  std::lock_guard lock(impl_->manifest_mutex);
  const auto name = next_versioned(dir, "judge");
  write_json_atomic(dir / name, to_json(summary));
  auto fresh = impl_->read_manifest(run_id);
  fresh.artifact_paths[std::string(artifacts::kJudge)] = name;
  write_json_atomic(impl_->manifest_path(run_id), to_json(fresh));
  spdlog::info("run {}: judging stored as {}", fresh.run_id, name);
  return summary;
}

}  // namespace spcgen

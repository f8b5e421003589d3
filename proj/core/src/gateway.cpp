#include "spcgen/gateway.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <random>
#include <thread>

#include "spcgen/providers.hpp"
#include "spcgen/table_io.hpp"

namespace spcgen {
namespace {

constexpr std::string_view kMockScheme = "mock:";

std::string summarize_errors(const ValidationReport& report) {
  std::string out = "validation failed:";
  const std::size_t shown = std::min<std::size_t>(report.errors.size(), 5);
  for (std::size_t i = 0; i < shown; ++i) {
    const auto& e = report.errors[i];
    out += " " + e.rule_id + "@row" + std::to_string(e.row_index);
  }
  if (report.errors.size() > shown) out += " (+" + std::to_string(report.errors.size() - shown) + " more)";
  return out;
}

std::string feedback_block(std::string_view language, const std::string& reason) {
  if (language == "de") {
    return "\n\n== Rückmeldung ==\nDie vorherige Antwort wurde abgelehnt (" + reason +
           "). Erstelle die vollständige Tabelle erneut und halte alle Vorgaben ein.\n";
  }
  return "\n\n== Feedback ==\nThe previous answer was rejected (" + reason +
         "). Produce the complete table again and satisfy every requirement.\n";
}

SampleOutcome run_sample(std::size_t sample_index, const GenerationRequest& req,
                         const std::string& prompt, std::span<const ReferenceDoc> attachments,
                         ChatClient& client, const GenerateOptions& options,
                         std::mt19937_64& rng) {
  SampleOutcome sample;
  sample.sample_index = sample_index;
  const CallContext context{"sample-" + std::to_string(sample_index)};
  std::optional<std::string> last_failure;

  for (std::size_t attempt = 1; attempt <= req.max_attempts; ++attempt) {
    if (attempt > 1) {
      const auto nominal = options.retry.nominal_delay(attempt - 1);
      if (nominal.count() > 0) {
        std::uniform_real_distribution<double> dist(1.0 - options.retry.jitter, 1.0 + options.retry.jitter);
        std::this_thread::sleep_for(std::chrono::milliseconds(
            static_cast<long long>(std::llround(static_cast<double>(nominal.count()) * dist(rng)))));
      }
    }

    AttemptRecord record;
    record.attempt_index = attempt;
    const std::string effective_prompt =
        req.retry_with_feedback && last_failure
            ? prompt + feedback_block(req.prompt_template.language, *last_failure)
            : prompt;
    std::optional<SpcCatalog> accepted;
    try {
      record.raw_output = client.complete(effective_prompt, attachments, context);
      auto parsed = parse_latex_table(record.raw_output, req.sector.value_or(Sector::kNT));
      record.distinct_area_count = parsed.catalog.distinct_area_count();
      if (parsed.catalog.rows.empty()) {
        record.failure_reason = "table has no data rows";
      } else if (!parsed.diagnostics.row_failures.empty()) {
        record.failure_reason = std::to_string(parsed.diagnostics.row_failures.size()) +
                                " malformed row(s); first: " +
                                parsed.diagnostics.row_failures.front().reason;
      } else {
        record.parse_ok = true;
        auto normalized = normalize_ids(std::move(parsed.catalog));
        auto report = validate_catalog(normalized);
        record.distinct_area_count = report.distinct_area_count;
        sample.validation = report;
        if (report.is_valid()) {
          record.validation_ok = true;
          accepted = std::move(normalized);
        } else {
          record.failure_reason = summarize_errors(report);
        }
      }
    } catch (const Error& e) {
      if (e.code() == Errc::kAuth) throw;
      record.failure_reason = e.what();
    }

    last_failure = record.failure_reason;
    sample.attempts.push_back(record);
    if (options.on_attempt) options.on_attempt(sample_index, sample.attempts.back());
    if (accepted) {
      sample.catalog = std::move(accepted);
      break;
    }
  }
  return sample;
}

}  // namespace

void check_config(const ProviderConfig& config) {
  if (config.endpoint_url.empty()) throw Error(Errc::kInvalidArgument, "provider endpoint is empty");
  if (config.request_timeout.count() <= 0) throw Error(Errc::kInvalidArgument, "request timeout must be positive");
  if (!(config.temperature >= 0.0)) throw Error(Errc::kInvalidArgument, "temperature must be non-negative");
  if (config.max_parallel == 0) throw Error(Errc::kInvalidArgument, "max_parallel must be at least 1");
}

std::unique_ptr<ChatClient> make_chat_client(const ProviderConfig& config) {
  check_config(config);
  if (config.endpoint_url.compare(0, kMockScheme.size(), kMockScheme) == 0) {
    const std::filesystem::path script(config.endpoint_url.substr(kMockScheme.size()));
    return std::unique_ptr<ChatClient>(new MockChatClient(MockChatClient::from_file(script)));
  }
  return std::make_unique<HttpChatClient>(config);
}

std::chrono::milliseconds RetryPolicy::nominal_delay(std::size_t retry) const {
  if (retry == 0 || base_delay.count() <= 0) return std::chrono::milliseconds(0);
  const double raw = static_cast<double>(base_delay.count()) * std::pow(factor, static_cast<double>(retry - 1));
  const double capped = std::min(raw, static_cast<double>(max_delay.count()));
  return std::chrono::milliseconds(static_cast<long long>(capped));
}

std::vector<AttemptRecord> GenerationOutcome::attempts() const {
  std::vector<AttemptRecord> all;
  for (const auto& s : samples) all.insert(all.end(), s.attempts.begin(), s.attempts.end());
  return all;
}

std::size_t GenerationOutcome::provider_calls() const {
  std::size_t n = 0;
  for (const auto& s : samples) n += s.attempts.size();
  return n;
}

ExhaustedError::ExhaustedError(GenerationOutcome outcome)
    : Error(Errc::kExhausted, "no valid catalog after " + std::to_string(outcome.provider_calls()) +
                                  " attempt(s) across " + std::to_string(outcome.samples.size()) +
                                  " sample(s)"),
      outcome_(std::move(outcome)) {}

std::size_t select_most_complete(std::span<const CompletenessKey> samples) {
  if (samples.empty()) throw Error(Errc::kEmpty, "no samples to select from");
  const CompletenessKey* best = &samples.front();
  for (const auto& s : samples.subspan(1)) {
    const auto better = std::tie(s.distinct_area_count, s.row_count) >
                        std::tie(best->distinct_area_count, best->row_count);
    const auto tied = std::tie(s.distinct_area_count, s.row_count) ==
                      std::tie(best->distinct_area_count, best->row_count);
    if (better || (tied && s.sample_index < best->sample_index)) best = &s;
  }
  return best->sample_index;
}

std::size_t select_most_complete(const std::vector<std::pair<std::size_t, SpcCatalog>>& samples) {
  std::vector<CompletenessKey> keys;
  keys.reserve(samples.size());
  for (const auto& [index, catalog] : samples) {
    keys.push_back({index, catalog.distinct_area_count(), catalog.rows.size()});
  }
  return select_most_complete(keys);
}

GenerationOutcome generate_catalog(const GenerationRequest& req, ChatClient& client,
                                   const GenerateOptions& options) {
  check_request(req);
  const std::string prompt = build_generation_prompt(req);
  std::vector<ReferenceDoc> attachments;
  for (const auto& ref : req.references) {
    if (ref.is_attachment()) attachments.push_back(ref);
  }

  const std::size_t n = req.effective_sample_count();
  GenerationOutcome outcome;
  outcome.samples.resize(n);

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr fatal;
  std::atomic<bool> abort{false};
  auto worker = [&](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    while (!abort) {
      const std::size_t i = next++;
      if (i >= n) break;
      try {
        outcome.samples[i] = run_sample(i + 1, req, prompt, attachments, client, options, rng);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!fatal) fatal = std::current_exception();
        abort = true;
      }
    }
  };

  const std::size_t threads = std::clamp<std::size_t>(options.max_parallel, 1, n);
  std::random_device rd;
  if (threads == 1) {
    worker(rd());
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker, rd());
    for (auto& th : pool) th.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  std::vector<CompletenessKey> keys;
  for (const auto& s : outcome.samples) {
    if (s.catalog) keys.push_back({s.sample_index, s.catalog->distinct_area_count(), s.catalog->rows.size()});
  }
  if (keys.empty()) throw ExhaustedError(std::move(outcome));
  const std::size_t selected = select_most_complete(keys);
  outcome.selected_sample = selected;
  outcome.catalog = outcome.samples[selected - 1].catalog;
  outcome.validation = outcome.samples[selected - 1].validation;
  return outcome;
}

}  // namespace spcgen

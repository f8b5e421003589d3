#include "spcgen/judge.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "spcgen/error.hpp"
#include "spcgen/text.hpp"

namespace spcgen {
namespace {

enum class LineKind { kAreaId, kCriterionId, kImprovement, kJustification, kDimension, kOther };

struct Classified {
  LineKind kind = LineKind::kOther;
  Dimension dimension = Dimension::kPR;
  std::string value;
};

bool contains(std::string_view haystack, std::string_view needle) {
  return haystack.find(needle) != std::string_view::npos;
}

bool any_of(std::string_view heading, std::initializer_list<std::string_view> needles) {
  return std::any_of(needles.begin(), needles.end(), [&](auto n) { return contains(heading, n); });
}

// Drops list numbering, bullets, and markdown emphasis in front of a line.
std::string_view strip_marker(std::string_view line) {
  line = text::trim(line);
  for (bool changed = true; changed && !line.empty();) {
    changed = false;
    std::size_t i = 0;
    while (i < line.size() && line[i] >= '0' && line[i] <= '9') ++i;
    if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')')) {
      line = text::trim(line.substr(i + 1));
      changed = true;
      continue;
    }
    if (line.front() == '-' || line.front() == '*' || line.front() == '#' || line.front() == '>') {
      line = text::trim(line.substr(1));
      changed = true;
    } else if (line.substr(0, 3) == "\xE2\x80\xA2") {
      line = text::trim(line.substr(3));
      changed = true;
    }
  }
  return line;
}

std::string without_emphasis(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c != '*' && c != '_') out += c;
  }
  return out;
}

std::optional<Dimension> match_dimension(std::string_view heading) {
  if (any_of(heading, {"technical correctness", "precision", "fachliche korrektheit", "korrektheit"})) {
    return Dimension::kPR;
  }
  if (any_of(heading, {"completeness", "vollständigkeit", "vollstaendigkeit"})) return Dimension::kCC;
  if (any_of(heading, {"ambition level", "differentiation", "ambitionsniveau", "differenzierung"})) {
    return Dimension::kDS;
  }
  if (any_of(heading, {"linguistic", "language and formality", "sprachliche", "formale qualität"})) {
    return Dimension::kLF;
  }
  const auto code_token = text::trim(heading.substr(0, heading.find_first_of(" (")));
  if (code_token == "pr") return Dimension::kPR;
  if (code_token == "cc") return Dimension::kCC;
  if (code_token == "ds") return Dimension::kDS;
  if (code_token == "lf") return Dimension::kLF;
  return std::nullopt;
}

Classified classify(std::string_view raw) {
  Classified out;
  const std::string_view line = strip_marker(raw);
  const auto colon = line.find(':');
  if (colon == std::string_view::npos) {
    out.value = std::string(text::trim(line));
    return out;
  }
  const std::string heading = text::to_lower(text::trim(without_emphasis(line.substr(0, colon))));
  auto value = text::trim(line.substr(colon + 1));
  while (!value.empty() && value.front() == '*') value.remove_prefix(1);
  out.value = std::string(text::trim(value));
  if (any_of(heading, {"area of action id", "handlungsfeld-id", "handlungsfeld id", "aa-id"})) {
    out.kind = LineKind::kAreaId;
  } else if (any_of(heading, {"criterion id", "kriterium-id", "kriteriums-id", "kriterium id", "c-id"})) {
    out.kind = LineKind::kCriterionId;
  } else if (any_of(heading, {"improvement", "verbesserung"})) {
    out.kind = LineKind::kImprovement;
  } else if (any_of(heading, {"justification", "begründung", "begruendung", "rationale"})) {
    out.kind = LineKind::kJustification;
  } else if (auto d = match_dimension(heading)) {
    out.kind = LineKind::kDimension;
    out.dimension = *d;
  } else {
    out.value = std::string(line);
  }
  return out;
}

[[noreturn]] void unparseable(const std::string& what) { throw Error(Errc::kJudgeUnparseable, what); }

int parse_score(std::string_view value, Dimension d) {
  const std::string dim(code(d));
  if (const auto open = value.find('['); open != std::string_view::npos) {
    const auto close = value.find(']', open);
    if (close != std::string_view::npos) value = value.substr(open + 1, close - open - 1);
  }
  value = text::trim(value);
  std::size_t i = 0;
  while (i < value.size() && value[i] >= '0' && value[i] <= '9') ++i;
  if (i == 0) unparseable("no score for " + dim);
  if (i < value.size() && (value[i] == '.' || value[i] == ',') && i + 1 < value.size() &&
      value[i + 1] >= '0' && value[i + 1] <= '9') {
    unparseable("fractional score for " + dim + ": " + std::string(value));
  }
  if (i < value.size() && (value.substr(i, 1) == "-" || value.substr(i, 3) == "\xE2\x80\x93")) {
    unparseable("score range instead of a score for " + dim);
  }
  if (i > 3) unparseable("score out of range for " + dim + ": " + std::string(value.substr(0, i)));
  const int score = std::stoi(std::string(value.substr(0, i)));
  if (score < 1 || score > 5) unparseable("score out of range for " + dim + ": " + std::to_string(score));
  return score;
}

std::optional<std::string> normalized_id(const std::string& value, bool area) {
  if (value.empty()) return std::nullopt;
  try {
    return area ? normalize_area_id(value) : normalize_criterion_id(value);
  } catch (const Error&) {
    return value;
  }
}

bool is_blank_placeholder(std::string_view s) {
  s = text::trim(s);
  return s.empty() || s == "[...]" || s == "..." || s == "-" || text::iequals_ascii(s, "none") ||
         text::iequals_ascii(s, "keine") || text::iequals_ascii(s, "n/a");
}

std::string one_line(std::string_view s) { return text::collapse_whitespace(s); }

struct RowAttempt {
  std::optional<JudgeVerdict> verdict;
  std::size_t calls = 0;
  std::exception_ptr error;
};

RowAttempt attempt_row(const SpcRow& row, ChatClient& client, const JudgeOptions& options) {
  RowAttempt out;
  std::string prompt;
  try {
    prompt = build_judge_prompt(row, options.prompt_template);
  } catch (const Error& e) {
    out.error = std::make_exception_ptr(Error(Errc::kSerialize, e.detail()));
    return out;
  }
  const CallContext context{"row-" + row.criterion_id};
  for (std::size_t attempt = 0; attempt <= options.max_retries; ++attempt) {
    if (attempt > 0) {
      const auto delay = options.retry.nominal_delay(attempt);
      if (delay.count() > 0) std::this_thread::sleep_for(delay);
    }
    ++out.calls;
    try {
      auto verdict = parse_judge_response(client.complete(prompt, {}, context));
      verdict.area_id = row.area_id;
      verdict.criterion_id = row.criterion_id;
      out.verdict = std::move(verdict);
      out.error = nullptr;
      return out;
    } catch (const Error& e) {
      if (e.code() == Errc::kAuth) throw;
      out.error = std::current_exception();
    }
  }
  return out;
}

std::string reason_of(const std::exception_ptr& error) {
  try {
    std::rethrow_exception(error);
  } catch (const std::exception& e) {
    return e.what();
  }
  return "unknown failure";
}

}  // namespace

std::string_view code(Dimension d) {
  switch (d) {
    case Dimension::kPR: return "PR";
    case Dimension::kCC: return "CC";
    case Dimension::kDS: return "DS";
    case Dimension::kLF: return "LF";
  }
  return "PR";
}

std::string_view rubric_heading(Dimension d) {
  switch (d) {
    case Dimension::kPR: return "Technical correctness and relevance";
    case Dimension::kCC: return "Completeness of the description";
    case Dimension::kDS: return "Ambition levels \xE2\x80\x93 differentiation and scalability";
    case Dimension::kLF: return "Linguistic and formal quality";
  }
  return "";
}

JudgeVerdict parse_judge_response(std::string_view input) {
  JudgeVerdict verdict;
  std::array<bool, 4> seen{};
  std::string* open_text = nullptr;
  bool have_improvement = false;
  std::optional<std::size_t> last_dimension;

  std::size_t start = 0;
  while (start <= input.size()) {
    auto end = input.find('\n', start);
    if (end == std::string_view::npos) end = input.size();
    const auto raw = input.substr(start, end - start);
    start = end + 1;
    if (text::trim(raw).empty()) continue;

    auto line = classify(raw);
    switch (line.kind) {
      case LineKind::kAreaId:
        verdict.area_id = normalized_id(line.value, true).value_or("");
        open_text = nullptr;
        break;
      case LineKind::kCriterionId:
        verdict.criterion_id = normalized_id(line.value, false).value_or("");
        open_text = nullptr;
        break;
      case LineKind::kImprovement:
        if (!verdict.improvement) verdict.improvement = std::string();
        *verdict.improvement = line.value;
        have_improvement = true;
        open_text = &*verdict.improvement;
        break;
      case LineKind::kJustification:
        if (last_dimension) {
          verdict.justifications[*last_dimension] = line.value;
          open_text = &verdict.justifications[*last_dimension];
        } else {
          open_text = nullptr;
        }
        break;
      case LineKind::kDimension: {
        const auto idx = static_cast<std::size_t>(line.dimension);
        if (seen[idx]) unparseable("dimension " + std::string(code(line.dimension)) + " appears twice");
        verdict.scores[idx] = parse_score(line.value, line.dimension);
        seen[idx] = true;
        last_dimension = idx;
        open_text = nullptr;
        break;
      }
      case LineKind::kOther:
        if (open_text) {
          if (!open_text->empty()) *open_text += ' ';
          *open_text += line.value;
        }
        break;
    }
  }
  for (auto d : kAllDimensions) {
    if (!seen[static_cast<std::size_t>(d)]) unparseable("missing " + std::string(code(d)));
  }
  for (auto& j : verdict.justifications) j = one_line(j);
  if (have_improvement && is_blank_placeholder(*verdict.improvement)) verdict.improvement.reset();
  if (verdict.improvement) verdict.improvement = one_line(*verdict.improvement);
  return verdict;
}

std::string render_verdict(const JudgeVerdict& verdict) {
  std::string out;
  out += "Area of Action ID: " + verdict.area_id + "\n";
  out += "Criterion ID: " + verdict.criterion_id + "\n";
  for (std::size_t k = 0; k < 4; ++k) {
    out += std::to_string(k + 1) + ". " + std::string(rubric_heading(kAllDimensions[k])) + ": [" +
           std::to_string(verdict.scores[k]) + "]\n";
    out += "Justification: " + one_line(verdict.justifications[k]) + "\n";
  }
  if (verdict.improvement) out += "5. (Optional) Suggested improvement: " + one_line(*verdict.improvement) + "\n";
  return out;
}

RowJudgement judge_row(const SpcRow& row, ChatClient& client, const JudgeOptions& options) {
  auto attempt = attempt_row(row, client, options);
  if (!attempt.verdict) std::rethrow_exception(attempt.error);
  return {std::move(*attempt.verdict), attempt.calls};
}

std::array<double, 4> dimension_means(const std::vector<JudgeVerdict>& verdicts) {
  std::array<double, 4> means{};
  if (verdicts.empty()) return means;
  for (std::size_t k = 0; k < 4; ++k) {
    double sum = 0.0;
    for (const auto& v : verdicts) sum += v.scores[k];
    means[k] = sum / static_cast<double>(verdicts.size());
  }
  return means;
}

JudgeSummary judge_catalog(const SpcCatalog& catalog, ChatClient& client, const JudgeOptions& options) {
  if (catalog.rows.empty()) throw Error(Errc::kEmptyCatalog, "catalog has no rows to judge");
  const std::size_t n = catalog.rows.size();
  std::vector<RowAttempt> results(n);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;

  auto worker = [&] {
    while (!abort) {
      const std::size_t i = next++;
      if (i >= n) break;
      try {
        results[i] = attempt_row(catalog.rows[i], client, options);
      } catch (...) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        abort = true;
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(options.max_parallel, 1, n);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (fatal) std::rethrow_exception(fatal);

  JudgeSummary summary;
  for (std::size_t i = 0; i < n; ++i) {
    summary.provider_calls += results[i].calls;
    if (results[i].verdict) {
      summary.verdicts.push_back(std::move(*results[i].verdict));
    } else {
      summary.failed_rows.push_back({catalog.rows[i].criterion_id, reason_of(results[i].error)});
    }
  }
  summary.row_count = summary.verdicts.size();
  if (summary.row_count == 0) {
    throw Error(Errc::kAllRowsFailed, "all " + std::to_string(n) + " row(s) failed; first: " +
                                          summary.failed_rows.front().reason);
  }
  summary.means = dimension_means(summary.verdicts);
  return summary;
}

}  // namespace spcgen

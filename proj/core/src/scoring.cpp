#include "spcgen/scoring.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "detail/http.hpp"
#include "spcgen/error.hpp"
#include "spcgen/text.hpp"

namespace spcgen {
namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed = 1469598103934665603ULL) {
  std::uint64_t h = seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

void normalize(Embedding& v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm <= 0.0) return;
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
}

// Distinct texts of both inputs and the position of each input in that list.
struct Dedup {
  std::vector<std::string> unique;
  std::unordered_map<std::string, std::size_t> index;

  std::size_t add(const std::string& s) {
    auto [it, inserted] = index.emplace(s, unique.size());
    if (inserted) unique.push_back(s);
    return it->second;
  }
};

double embed_cosine_score(std::string_view a, std::string_view b, const Embedding& ea,
                          const Embedding& eb) {
  if (a == b && !text::trim(a).empty()) return 1.0;
  if (text::trim(a).empty() || text::trim(b).empty()) return 0.0;
  return clamp01((cosine(ea, eb) + 1.0) / 2.0);
}

using TokenVectors = std::unordered_map<std::string, Embedding>;

TokenVectors embed_tokens(EmbeddingBackend& backend, const std::vector<std::vector<std::string>>& token_lists) {
  Dedup dedup;
  for (const auto& list : token_lists) {
    for (const auto& t : list) dedup.add(t);
  }
  TokenVectors out;
  if (dedup.unique.empty()) return out;
  auto vectors = backend.embed(dedup.unique);
  for (std::size_t i = 0; i < dedup.unique.size(); ++i) {
    normalize(vectors[i]);
    out.emplace(dedup.unique[i], std::move(vectors[i]));
  }
  return out;
}

double token_align_f1(const std::vector<std::string>& a, const std::vector<std::string>& b,
                      const TokenVectors& vectors) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  std::vector<double> best_a(a.size(), 0.0);
  std::vector<double> best_b(b.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& va = vectors.at(a[i]);
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double sim = a[i] == b[j] ? 1.0 : std::max(0.0, std::min(1.0, cosine(va, vectors.at(b[j]))));
      best_a[i] = std::max(best_a[i], sim);
      best_b[j] = std::max(best_b[j], sim);
    }
  }
  double precision = 0.0;
  for (double x : best_a) precision += x;
  precision /= static_cast<double>(a.size());
  double recall = 0.0;
  for (double x : best_b) recall += x;
  recall /= static_cast<double>(b.size());
  if (precision + recall <= 0.0) return 0.0;
  return clamp01(2.0 * precision * recall / (precision + recall));
}

}  // namespace

std::string_view code(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::kLexicalF1: return "LEXICAL_F1";
    case ScorerKind::kEmbedCosine: return "EMBED_COSINE";
    case ScorerKind::kTokenAlignF1: return "TOKEN_ALIGN_F1";
  }
  return "LEXICAL_F1";
}

std::optional<ScorerKind> parse_scorer_kind(std::string_view token) {
  token = text::trim(token);
  for (auto k : {ScorerKind::kLexicalF1, ScorerKind::kEmbedCosine, ScorerKind::kTokenAlignF1}) {
    if (text::iequals_ascii(token, code(k))) return k;
  }
  if (text::iequals_ascii(token, "lexical")) return ScorerKind::kLexicalF1;
  if (text::iequals_ascii(token, "embed")) return ScorerKind::kEmbedCosine;
  if (text::iequals_ascii(token, "token-align")) return ScorerKind::kTokenAlignF1;
  return std::nullopt;
}

double lexical_f1(std::string_view a, std::string_view b) {
  const auto ta = text::tokenize(a);
  const auto tb = text::tokenize(b);
  if (ta.empty() && tb.empty()) return 1.0;
  if (ta.empty() || tb.empty()) return 0.0;
  std::map<std::string, std::size_t> counts;
  for (const auto& t : ta) ++counts[t];
  std::size_t common = 0;
  for (const auto& t : tb) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  // F1 = 2PR/(P+R) with P = common/|a|, R = common/|b|.
  return 2.0 * static_cast<double>(common) / static_cast<double>(ta.size() + tb.size());
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(Errc::kEmbedBackend, "embedding dimensions differ");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na <= 0.0 || nb <= 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

HashingEmbeddingBackend::HashingEmbeddingBackend(std::size_t dimension) : dimension_(dimension) {
  if (dimension_ == 0) throw Error(Errc::kInvalidArgument, "embedding dimension must be positive");
}

std::vector<Embedding> HashingEmbeddingBackend::embed(std::span<const std::string> texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  auto add_feature = [&](Embedding& v, std::string_view feature, double weight) {
    const std::uint64_t h = fnv1a(feature);
    const double sign = (h >> 63) ? -1.0 : 1.0;
    v[h % dimension_] += sign * weight;
  };
  for (const auto& t : texts) {
    Embedding v(dimension_, 0.0);
    for (const auto& token : text::tokenize(t)) {
      add_feature(v, token, 1.0);
      const std::string padded = "<" + token + ">";
      std::vector<std::size_t> starts;
      for (std::size_t i = 0; i < padded.size(); ++i) {
        if ((static_cast<unsigned char>(padded[i]) & 0xC0) != 0x80) starts.push_back(i);
      }
      starts.push_back(padded.size());
      for (std::size_t k = 0; k + 3 < starts.size(); ++k) {
        add_feature(v, std::string_view(padded).substr(starts[k], starts[k + 3] - starts[k]), 0.5);
      }
    }
    out.push_back(std::move(v));
  }
  return out;
}

HttpEmbeddingBackend::HttpEmbeddingBackend(EmbeddingConfig config) : config_(std::move(config)) {
  try {
    api_key_ = detail::api_key_from_env(config_.api_key_env);
  } catch (const Error& e) {
    throw Error(Errc::kEmbedBackend, e.detail());
  }
  if (config_.batch_size == 0) config_.batch_size = 1;
  if (config_.max_parallel == 0) config_.max_parallel = 1;
}

std::vector<Embedding> HttpEmbeddingBackend::embed_batch(std::span<const std::string> texts) const {
  nlohmann::json body{{"model", config_.model},
                      {"input", std::vector<std::string>(texts.begin(), texts.end())}};
  nlohmann::json response;
  try {
    response = detail::post_json(config_.endpoint, "/embeddings", api_key_, body, config_.request_timeout);
  } catch (const Error& e) {
    throw Error(Errc::kEmbedBackend, e.what());
  }
  if (!response.contains("data") || !response["data"].is_array() || response["data"].size() != texts.size()) {
    throw Error(Errc::kEmbedBackend, "embedding response does not match the request size");
  }
  std::vector<Embedding> out(texts.size());
  for (const auto& item : response["data"]) {
    const std::size_t index = item.value("index", std::size_t{0});
    if (index >= texts.size() || !item.contains("embedding")) {
      throw Error(Errc::kEmbedBackend, "malformed embedding entry");
    }
    out[index] = item["embedding"].get<Embedding>();
  }
  return out;
}

std::vector<Embedding> HttpEmbeddingBackend::embed(std::span<const std::string> texts) {
  std::vector<Embedding> out(texts.size());
  const std::size_t batches = (texts.size() + config_.batch_size - 1) / config_.batch_size;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t b = next++; b < batches; b = next++) {
      const std::size_t first = b * config_.batch_size;
      const std::size_t count = std::min(config_.batch_size, texts.size() - first);
      try {
        auto vectors = embed_batch(texts.subspan(first, count));
        std::move(vectors.begin(), vectors.end(), out.begin() + static_cast<std::ptrdiff_t>(first));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = batches;
      }
    }
  };
  const std::size_t threads = std::min(config_.max_parallel, std::max<std::size_t>(batches, 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::unique_ptr<EmbeddingBackend> make_embedding_backend(const EmbeddingConfig& config) {
  const std::string_view endpoint = config.endpoint;
  if (endpoint.substr(0, 5) == "hash:") {
    const auto dim = endpoint.substr(5);
    std::size_t dimension = 512;
    if (!dim.empty()) {
      try {
        dimension = std::stoul(std::string(dim));
      } catch (const std::exception&) {
        throw Error(Errc::kInvalidArgument, "bad hashing dimension '" + std::string(dim) + "'");
      }
    }
    return std::make_unique<HashingEmbeddingBackend>(dimension);
  }
  return std::make_unique<HttpEmbeddingBackend>(config);
}

std::vector<double> Scorer::score_matrix(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<double> out;
  out.reserve(a.size() * b.size());
  for (const auto& x : a) {
    for (const auto& y : b) out.push_back(score(x, y));
  }
  return out;
}

std::vector<double> Scorer::score_pairs(std::span<const std::pair<std::string, std::string>> pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& [x, y] : pairs) out.push_back(score(x, y));
  return out;
}

EmbedCosineScorer::EmbedCosineScorer(std::shared_ptr<EmbeddingBackend> backend) : backend_(std::move(backend)) {}

double EmbedCosineScorer::score(std::string_view a, std::string_view b) {
  const std::pair<std::string, std::string> p{std::string(a), std::string(b)};
  return score_pairs(std::span(&p, 1)).front();
}

std::vector<double> EmbedCosineScorer::score_matrix(std::span<const std::string> a,
                                                    std::span<const std::string> b) {
  Dedup dedup;
  std::vector<std::size_t> ia, ib;
  for (const auto& s : a) ia.push_back(dedup.add(s));
  for (const auto& s : b) ib.push_back(dedup.add(s));
  const auto vectors = backend_->embed(dedup.unique);
  std::vector<double> out;
  out.reserve(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      out.push_back(embed_cosine_score(a[i], b[j], vectors[ia[i]], vectors[ib[j]]));
    }
  }
  return out;
}

std::vector<double> EmbedCosineScorer::score_pairs(std::span<const std::pair<std::string, std::string>> pairs) {
  Dedup dedup;
  std::vector<std::pair<std::size_t, std::size_t>> idx;
  for (const auto& [x, y] : pairs) idx.emplace_back(dedup.add(x), dedup.add(y));
  const auto vectors = backend_->embed(dedup.unique);
  std::vector<double> out;
  out.reserve(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    out.push_back(embed_cosine_score(pairs[k].first, pairs[k].second, vectors[idx[k].first],
                                     vectors[idx[k].second]));
  }
  return out;
}

TokenAlignScorer::TokenAlignScorer(std::shared_ptr<EmbeddingBackend> backend) : backend_(std::move(backend)) {}

double TokenAlignScorer::score(std::string_view a, std::string_view b) {
  const std::pair<std::string, std::string> p{std::string(a), std::string(b)};
  return score_pairs(std::span(&p, 1)).front();
}

std::vector<double> TokenAlignScorer::score_matrix(std::span<const std::string> a,
                                                   std::span<const std::string> b) {
  std::vector<std::vector<std::string>> ta, tb;
  for (const auto& s : a) ta.push_back(text::tokenize(s));
  for (const auto& s : b) tb.push_back(text::tokenize(s));
  std::vector<std::vector<std::string>> all = ta;
  all.insert(all.end(), tb.begin(), tb.end());
  const auto vectors = embed_tokens(*backend_, all);
  std::vector<double> out;
  out.reserve(a.size() * b.size());
  for (const auto& x : ta) {
    for (const auto& y : tb) out.push_back(token_align_f1(x, y, vectors));
  }
  return out;
}

std::vector<double> TokenAlignScorer::score_pairs(std::span<const std::pair<std::string, std::string>> pairs) {
  std::vector<std::vector<std::string>> tokens;
  for (const auto& [x, y] : pairs) {
    tokens.push_back(text::tokenize(x));
    tokens.push_back(text::tokenize(y));
  }
  const auto vectors = embed_tokens(*backend_, tokens);
  std::vector<double> out;
  out.reserve(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    out.push_back(token_align_f1(tokens[2 * k], tokens[2 * k + 1], vectors));
  }
  return out;
}

std::unique_ptr<Scorer> make_scorer(ScorerKind kind, const EmbeddingConfig& config) {
  switch (kind) {
    case ScorerKind::kLexicalF1:
      return std::make_unique<LexicalScorer>();
    case ScorerKind::kEmbedCosine:
      return std::make_unique<EmbedCosineScorer>(make_embedding_backend(config));
    case ScorerKind::kTokenAlignF1:
      return std::make_unique<TokenAlignScorer>(make_embedding_backend(config));
  }
  return std::make_unique<LexicalScorer>();
}

}  // namespace spcgen

#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace spcgen {

enum class ScorerKind { kLexicalF1, kEmbedCosine, kTokenAlignF1 };

std::string_view code(ScorerKind kind);
/// Accepts the codes and the CLI spellings "lexical", "embed", "token-align".
std::optional<ScorerKind> parse_scorer_kind(std::string_view token);

/// Token-multiset F1 over text::tokenize. Two texts without tokens score 1,
/// one without tokens scores 0.
double lexical_f1(std::string_view a, std::string_view b);

using Embedding = std::vector<double>;

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  /// One vector per input, all of equal dimension.
  virtual std::vector<Embedding> embed(std::span<const std::string> texts) = 0;
};

/// Deterministic offline embeddings: signed feature hashing of lowercased
/// tokens and their character trigrams.
class HashingEmbeddingBackend : public EmbeddingBackend {
 public:
  explicit HashingEmbeddingBackend(std::size_t dimension = 512);
  std::vector<Embedding> embed(std::span<const std::string> texts) override;

 private:
  std::size_t dimension_;
};

struct EmbeddingConfig {
  /// "hash:" / "hash:<dim>" for the offline backend, otherwise the base URL
  /// of an OpenAI-compatible embeddings API.
  std::string endpoint = "hash:";
  std::string api_key_env = "OPENAI_API_KEY";
  std::string model = "intfloat/multilingual-e5-large";
  std::string language = "de";
  std::size_t batch_size = 64;
  std::size_t max_parallel = 4;
  std::chrono::milliseconds request_timeout{60000};
};

/// POST {endpoint}/embeddings. Failures raise Error(kEmbedBackend).
class HttpEmbeddingBackend : public EmbeddingBackend {
 public:
  explicit HttpEmbeddingBackend(EmbeddingConfig config);
  std::vector<Embedding> embed(std::span<const std::string> texts) override;

 private:
  std::vector<Embedding> embed_batch(std::span<const std::string> texts) const;

  EmbeddingConfig config_;
  std::string api_key_;
};

std::unique_ptr<EmbeddingBackend> make_embedding_backend(const EmbeddingConfig& config);

double cosine(std::span<const double> a, std::span<const double> b);

/// Similarity in [0,1]. Batch entry points let embedding scorers embed
/// every distinct text once.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual ScorerKind kind() const = 0;
  virtual double score(std::string_view a, std::string_view b) = 0;
  /// Row-major |a| x |b| scores.
  virtual std::vector<double> score_matrix(std::span<const std::string> a,
                                           std::span<const std::string> b);
  virtual std::vector<double> score_pairs(std::span<const std::pair<std::string, std::string>> pairs);
};

class LexicalScorer : public Scorer {
 public:
  ScorerKind kind() const override { return ScorerKind::kLexicalF1; }
  double score(std::string_view a, std::string_view b) override { return lexical_f1(a, b); }
};

/// Whole-text cosine mapped from [-1,1] to [0,1]. Identical non-empty texts
/// score 1; an empty text scores 0 against anything else.
class EmbedCosineScorer : public Scorer {
 public:
  explicit EmbedCosineScorer(std::shared_ptr<EmbeddingBackend> backend);
  ScorerKind kind() const override { return ScorerKind::kEmbedCosine; }
  double score(std::string_view a, std::string_view b) override;
  std::vector<double> score_matrix(std::span<const std::string> a,
                                   std::span<const std::string> b) override;
  std::vector<double> score_pairs(std::span<const std::pair<std::string, std::string>> pairs) override;

 private:
  std::shared_ptr<EmbeddingBackend> backend_;
};

/// Greedy token alignment F1: each token is matched to its most similar
/// token on the other side, negative cosines count as 0. Equal tokens have
/// similarity 1.
class TokenAlignScorer : public Scorer {
 public:
  explicit TokenAlignScorer(std::shared_ptr<EmbeddingBackend> backend);
  ScorerKind kind() const override { return ScorerKind::kTokenAlignF1; }
  double score(std::string_view a, std::string_view b) override;
  std::vector<double> score_matrix(std::span<const std::string> a,
                                   std::span<const std::string> b) override;
  std::vector<double> score_pairs(std::span<const std::pair<std::string, std::string>> pairs) override;

 private:
  std::shared_ptr<EmbeddingBackend> backend_;
};

std::unique_ptr<Scorer> make_scorer(ScorerKind kind, const EmbeddingConfig& config = {});

/// Convenience single-pair call.
inline double score_pair(Scorer& scorer, std::string_view a, std::string_view b) {
  return scorer.score(a, b);
}

}  // namespace spcgen

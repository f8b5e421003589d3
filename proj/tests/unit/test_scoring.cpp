#include <gtest/gtest.h>

#include <httplib.h>

#include <cmath>
#include <cstdlib>
#include <map>
#include <random>
#include <thread>

#include "fixtures.hpp"
#include "spcgen/error.hpp"
#include "spcgen/scoring.hpp"

using namespace spcgen;
using nlohmann::json;

namespace {

// Independent F1 over whitespace-split, lowercase ASCII words.
double oracle_f1(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  std::map<std::string, int> ca, cb;
  for (const auto& t : a) ++ca[t];
  for (const auto& t : b) ++cb[t];
  int common = 0;
  for (const auto& [t, n] : ca) {
    auto it = cb.find(t);
    if (it != cb.end()) common += std::min(n, it->second);
  }
  if (common == 0) return 0.0;
  const double p = static_cast<double>(common) / static_cast<double>(a.size());
  const double r = static_cast<double>(common) / static_cast<double>(b.size());
  return 2 * p * r / (p + r);
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) out += (out.empty() ? "" : " ") + w;
  return out;
}

}  // namespace

TEST(Lexical, Examples) {
  EXPECT_DOUBLE_EQ(lexical_f1("FSC zertifiziertes Holz", "FSC zertifiziertes Holz"), 1.0);
  EXPECT_DOUBLE_EQ(lexical_f1("Holz FSC zertifiziert", "FSC zertifiziert Holz"), 1.0);
  EXPECT_DOUBLE_EQ(lexical_f1("energy label", "wood origin"), 0.0);
  // {a,b,b,c} vs {b,c,d}: overlap 2, P = 2/4, R = 2/3, F1 = 4/7.
  EXPECT_NEAR(lexical_f1("a b b c", "b c d"), 4.0 / 7.0, 1e-12);
  EXPECT_DOUBLE_EQ(lexical_f1("", ""), 1.0);
  EXPECT_DOUBLE_EQ(lexical_f1("", "x"), 0.0);
}

TEST(Lexical, CaseAndPunctuationInsensitive) {
  EXPECT_DOUBLE_EQ(lexical_f1("Größe, ÄRGER!", "größe ärger"), 1.0);
  EXPECT_DOUBLE_EQ(lexical_f1("ISO-14001", "iso 14001"), 1.0);
}

TEST(Lexical, MatchesOracleProperty) {
  std::mt19937_64 rng(4);
  const std::vector<std::string> vocab{"holz", "fsc", "energie", "label", "a", "b", "c", "d"};
  for (int i = 0; i < 300; ++i) {
    std::vector<std::string> a(rng() % 8), b(rng() % 8);
    for (auto& w : a) w = vocab[rng() % vocab.size()];
    for (auto& w : b) w = vocab[rng() % vocab.size()];
    const double got = lexical_f1(join(a), join(b));
    EXPECT_NEAR(got, oracle_f1(a, b), 1e-12);
    EXPECT_DOUBLE_EQ(got, lexical_f1(join(b), join(a)));
  }
}

TEST(Scorers, BoundsAndIdentity) {
  std::mt19937_64 rng(8);
  for (auto kind : {ScorerKind::kLexicalF1, ScorerKind::kEmbedCosine, ScorerKind::kTokenAlignF1}) {
    auto scorer = make_scorer(kind);
    EXPECT_EQ(scorer->kind(), kind);
    for (int i = 0; i < 50; ++i) {
      const auto a = fixtures::random_text(rng, 1, 12, true);
      const auto b = fixtures::random_text(rng, 0, 12, true);
      const double s = scorer->score(a, b);
      EXPECT_GE(s, 0.0);
      EXPECT_LE(s, 1.0);
      EXPECT_NEAR(scorer->score(a, a), 1.0, 1e-9) << code(kind) << " " << a;
    }
  }
}

TEST(Scorers, MatrixMatchesSingleCalls) {
  std::mt19937_64 rng(12);
  std::vector<std::string> a, b;
  for (int i = 0; i < 4; ++i) a.push_back(fixtures::random_text(rng, 1, 6, false));
  for (int i = 0; i < 3; ++i) b.push_back(fixtures::random_text(rng, 1, 6, false));
  for (auto kind : {ScorerKind::kLexicalF1, ScorerKind::kEmbedCosine, ScorerKind::kTokenAlignF1}) {
    auto scorer = make_scorer(kind);
    const auto m = scorer->score_matrix(a, b);
    ASSERT_EQ(m.size(), 12u);
    std::vector<std::pair<std::string, std::string>> pairs;
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = 0; j < b.size(); ++j) {
        EXPECT_NEAR(m[i * 3 + j], scorer->score(a[i], b[j]), 1e-12);
        pairs.emplace_back(a[i], b[j]);
      }
    }
    const auto p = scorer->score_pairs(pairs);
    for (std::size_t k = 0; k < p.size(); ++k) EXPECT_NEAR(p[k], m[k], 1e-12);
  }
}

TEST(Scorers, ParseKind) {
  EXPECT_EQ(parse_scorer_kind("lexical"), ScorerKind::kLexicalF1);
  EXPECT_EQ(parse_scorer_kind("embed"), ScorerKind::kEmbedCosine);
  EXPECT_EQ(parse_scorer_kind("token-align"), ScorerKind::kTokenAlignF1);
  EXPECT_EQ(parse_scorer_kind(code(ScorerKind::kTokenAlignF1)), ScorerKind::kTokenAlignF1);
  EXPECT_FALSE(parse_scorer_kind("bleu"));
}

TEST(Embedding, CosineAndHashing) {
  const std::vector<double> x{1, 0}, y{0, 1}, z{-1, 0};
  EXPECT_DOUBLE_EQ(cosine(x, x), 1.0);
  EXPECT_DOUBLE_EQ(cosine(x, y), 0.0);
  EXPECT_DOUBLE_EQ(cosine(x, z), -1.0);
  HashingEmbeddingBackend backend(64);
  const std::vector<std::string> texts{"Holz", "holz", "Metall"};
  const auto v = backend.embed(texts);
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[0].size(), 64u);
  EXPECT_EQ(v[0], v[1]);
  EXPECT_EQ(backend.embed(texts), v);
}

TEST(Embedding, HttpBackendAndFailures) {
  ::setenv("SPCGEN_TEST_EMBED_KEY", "k", 1);
  httplib::Server server;
  int requests = 0;
  server.Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
    ++requests;
    const auto body = json::parse(req.body);
    json data = json::array();
    std::size_t i = 0;
    // Reverse order on the wire; the client must sort by index.
    std::vector<json> items;
    for (const auto& t : body["input"]) {
      const double len = static_cast<double>(t.get<std::string>().size());
      items.push_back({{"index", i++}, {"embedding", {len, 1.0}}});
    }
    for (auto it = items.rbegin(); it != items.rend(); ++it) data.push_back(*it);
    res.set_content(json{{"data", data}}.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  EmbeddingConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  cfg.api_key_env = "SPCGEN_TEST_EMBED_KEY";
  cfg.batch_size = 2;
  HttpEmbeddingBackend backend(cfg);
  const std::vector<std::string> texts{"a", "bbb", "cc"};
  const auto v = backend.embed(texts);
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[1], (Embedding{3.0, 1.0}));
  EXPECT_EQ(v[2], (Embedding{2.0, 1.0}));
  EXPECT_EQ(requests, 2);
  server.stop();
  t.join();

  try {
    backend.embed(texts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kEmbedBackend);
  }
  ::unsetenv("SPCGEN_TEST_EMBED_KEY_UNSET");
  cfg.api_key_env = "SPCGEN_TEST_EMBED_KEY_UNSET";
  EXPECT_THROW(HttpEmbeddingBackend{cfg}, Error);
}

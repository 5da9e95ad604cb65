#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "prehoc/text_features.hpp"

namespace prehoc {
namespace {

TEST(Tokenize, Rules) {
  EXPECT_EQ(tokenize("Heart-Disease dataset, 13 features."),
            (std::vector<std::string>{"heart", "disease", "dataset", "13", "features"}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_TRUE(tokenize("a b c").empty());
  EXPECT_EQ(tokenize("caf\xC3\xA9 ok"), (std::vector<std::string>{"caf", "ok"}));
}

TEST(TfIdf, IdfFormula) {
  const std::vector<std::string> one{"only document here"};
  auto m1 = TfIdfModel::fit(one);
  for (double w : m1.idf()) EXPECT_DOUBLE_EQ(w, 1.0);

  const std::vector<std::string> three{"shared alpha", "shared beta", "shared gamma gamma"};
  auto m = TfIdfModel::fit(three);
  EXPECT_NEAR(*m.idf_of("shared"), std::log(4.0 / 4.0) + 1.0, 1e-12);
  EXPECT_NEAR(*m.idf_of("alpha"), std::log(4.0 / 2.0) + 1.0, 1e-12);
  EXPECT_NEAR(*m.idf_of("alpha"), 1.6931, 1e-4);
  EXPECT_FALSE(m.idf_of("delta").has_value());
  EXPECT_EQ(m.doc_count(), 3u);
  for (double w : m.idf()) EXPECT_GT(w, 0.0);
}

TEST(TfIdf, EmptyCorpus) {
  EXPECT_THROW(TfIdfModel::fit(std::vector<std::string>{}), Error);
}

TEST(TfIdf, VectorizeMatchesHandComputation) {
  const std::vector<std::string> corpus{"apple banana", "apple cherry", "apple banana durian"};
  auto m = TfIdfModel::fit(corpus);
  auto v = m.vectorize("banana cherry banana");
  const double wb = 2.0 * (std::log(4.0 / 3.0) + 1.0);
  const double wc = 1.0 * (std::log(4.0 / 2.0) + 1.0);
  const double norm = std::sqrt(wb * wb + wc * wc);
  ASSERT_EQ(v.entries.size(), 2u);
  for (const auto& [idx, w] : v.entries) {
    if (idx == *m.index_of("banana")) EXPECT_NEAR(w, wb / norm, 1e-12);
    else if (idx == *m.index_of("cherry")) EXPECT_NEAR(w, wc / norm, 1e-12);
    else ADD_FAILURE() << "unexpected index";
  }
  EXPECT_TRUE(m.vectorize("zebra quokka").empty());
  EXPECT_NEAR(m.vectorize(corpus[2]).norm(), 1.0, 1e-12);
}

TEST(TfIdf, SparseIndicesStrictlyIncreasing) {
  const std::vector<std::string> corpus{"zeta alpha mu", "mu nu xi alpha", "beta"};
  auto m = TfIdfModel::fit(corpus);
  auto v = m.vectorize("xi mu alpha zeta beta nu");
  for (std::size_t i = 1; i < v.entries.size(); ++i) EXPECT_LT(v.entries[i - 1].first, v.entries[i].first);
}

TEST(Cosine, DenseExamples) {
  const std::vector<double> a{1, 1}, b{1, 0}, c{0, 1};
  EXPECT_NEAR(cosine_similarity(a, a), 1.0, 1e-15);
  EXPECT_EQ(cosine_similarity(b, c), 0.0);
  EXPECT_NEAR(cosine_similarity(a, b), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_EQ(cosine_similarity(std::vector<double>{0, 0}, a), 0.0);
  EXPECT_THROW(cosine_similarity(std::vector<double>{1, 2, 3}, a), Error);
}

TEST(CosineProperties, SymmetricAndScaleInvariant) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(6), b(6);
    for (auto& x : a) x = n(rng);
    for (auto& x : b) x = n(rng);
    const double alpha = std::exp(n(rng) * 3);
    std::vector<double> sa(a);
    for (auto& x : sa) x *= alpha;
    EXPECT_NEAR(cosine_similarity(a, b), cosine_similarity(b, a), 1e-12);
    EXPECT_NEAR(cosine_similarity(sa, b), cosine_similarity(a, b), 1e-9);
    EXPECT_LE(std::abs(cosine_similarity(a, b)), 1.0);
  }
}

TEST(TfIdfProperties, FittedDocumentsHaveUnitNorm) {
  std::mt19937_64 rng(2);
  const std::vector<std::string> words{"gene", "cell", "loan", "credit", "pixel", "image", "sensor", "drift", "wine"};
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1), len(0, 8);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::string> corpus(5);
    for (auto& d : corpus) {
      for (std::size_t k = len(rng); k > 0; --k) d += words[pick(rng)] + " ";
    }
    auto m = TfIdfModel::fit(corpus);
    for (const auto& d : corpus) {
      const double norm = m.vectorize(d).norm();
      if (tokenize(d).empty()) EXPECT_EQ(norm, 0.0);
      else EXPECT_NEAR(norm, 1.0, 1e-12);
    }
  }
}

TEST(Embeddings, LoadsUniformTable) {
  std::stringstream in("ds_a\t0.1,0.2,0.3,0.4\nds_b\t1,2,3,4\n");
  auto t = read_embeddings(in);
  EXPECT_EQ(t.dim, 4u);
  EXPECT_EQ(t.vectors.size(), 2u);
  EXPECT_EQ(t.find("ds_b")->at(3), 4.0);
}

TEST(Embeddings, Errors) {
  std::stringstream ragged("a\t1,2,3,4\nb\t1,2,3\n");
  try {
    read_embeddings(ragged);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionInconsistent);
    EXPECT_EQ(e.location(), 2u);
  }
  std::stringstream empty("");
  try {
    read_embeddings(empty);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCorpus);
  }
  std::stringstream bad("a\t1,x\n");
  try {
    read_embeddings(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_EQ(e.location(), 1u);
  }
  std::stringstream no_tab("a 1,2\n");
  EXPECT_THROW(read_embeddings(no_tab), Error);
}

}  // namespace
}  // namespace prehoc

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "support.hpp"
#include "tspmgs/errors.hpp"
#include "tspmgs/similarity.hpp"

using namespace tspmgs;
using namespace testing_support;

TEST(Cosine, Examples) {
  const Vector v = Vector::LinSpaced(4, 0.5, 2.0);
  EXPECT_DOUBLE_EQ(cosine(v, v), 1.0);
  EXPECT_DOUBLE_EQ(cosine(Vector::Unit(3, 0), Vector::Unit(3, 1)), 0.0);
  EXPECT_NEAR(cosine(Vector{{1.0, 1.0, 0.0}}, Vector{{1.0, 0.0, 0.0}}), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Cosine, Errors) {
  EXPECT_THROW(cosine(Vector::Zero(3), Vector::Ones(3)), NumericError);
  EXPECT_THROW(cosine(Vector::Ones(3), Vector::Ones(4)), InputError);
}

TEST(Coarse, IdenticalSentencesGiveUniform) {
  Matrix s(5, 3);
  for (int r = 0; r < 5; ++r) s.row(r) = Eigen::RowVector3d(0.2, -0.4, 0.9);
  for (double p : coarse_grained(Vector{{1.0, 2.0, 3.0}}, s, 0.07)) EXPECT_NEAR(p, 0.2, 1e-15);
}

TEST(Coarse, TwoLevelHandExample) {
  // Similarities (1, 0) at temperature 1.
  Matrix s(2, 2);
  s << 1, 0, 0, 1;
  const auto p = coarse_grained(Vector{{1.0, 0.0}}, s, 1.0);
  EXPECT_NEAR(p[0], std::exp(1.0) / (std::exp(1.0) + 1.0), 1e-15);
  EXPECT_NEAR(p[1], 1.0 / (std::exp(1.0) + 1.0), 1e-15);
  EXPECT_NEAR(p[0], 0.7311, 5e-5);
  EXPECT_NEAR(p[1], 0.2689, 5e-5);
}

TEST(Coarse, TemperatureMustBePositive) {
  Matrix s = Matrix::Identity(2, 2);
  EXPECT_THROW(coarse_grained(Vector::Unit(2, 0), s, 0.0), ConfigError);
  EXPECT_THROW(coarse_grained(Vector::Unit(2, 0), s, -1.0), ConfigError);
}

TEST(Coarse, MatchesOracle) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 2 + trial % 30, L = 2 + trial % 6;
    const auto img = random_vector(gen, d);
    const auto sent = random_rows(gen, L, d);
    const double tau = 0.01 + 0.5 * (trial % 7) / 7.0;
    const auto got = coarse_grained(to_eigen(img), to_matrix(sent), tau);
    const auto want = oracle::coarse(img, sent, tau);
    for (std::size_t j = 0; j < L; ++j) EXPECT_NEAR(got[j], want[j], 1e-9);
  }
}

TEST(Coarse, ProbabilitiesFormADistribution) {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t d = 3 + trial % 17, L = 2 + trial % 5;
    const auto p = coarse_grained(to_eigen(random_vector(gen, d)), to_matrix(random_rows(gen, L, d)), 0.07);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-6);
    for (double x : p) {
      EXPECT_GT(x, 0.0);
      EXPECT_LT(x, 1.0);
    }
  }
}

TEST(Coarse, InvariantToPositiveRescaling) {
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector img = to_eigen(random_vector(gen, 8));
    const Matrix sent = to_matrix(random_rows(gen, 5, 8));
    const auto a = coarse_grained(img, sent, 0.07);
    const auto b = coarse_grained(scale(gen) * img, sent, 0.07);
    EXPECT_EQ(std::max_element(a.begin(), a.end()) - a.begin(), std::max_element(b.begin(), b.end()) - b.begin());
    for (std::size_t j = 0; j < a.size(); ++j) EXPECT_NEAR(a[j], b[j], 1e-12);
  }
}

TEST(Softmax, StableForLargeLogits) {
  const auto p = softmax({1000.0, 1001.0}, 1.0);
  EXPECT_NEAR(p[1], std::exp(1.0) / (1.0 + std::exp(1.0)), 1e-12);
}

TEST(CoarsePatches, SinglePatchMatchesCoarse) {
  std::mt19937_64 gen(14);
  const Matrix sent = to_matrix(random_rows(gen, 5, 6));
  const auto patch = random_vector(gen, 6);
  const auto a = coarse_grained_patches(to_matrix({patch}), sent, 0.07);
  const auto b = coarse_grained(to_eigen(patch), sent, 0.07);
  for (std::size_t j = 0; j < a.size(); ++j) EXPECT_NEAR(a[j], b[j], 1e-15);
}

TEST(CoarsePatches, IdenticalPatchesMatchOne) {
  std::mt19937_64 gen(15);
  const Matrix sent = to_matrix(random_rows(gen, 5, 6));
  const auto patch = random_vector(gen, 6);
  const auto a = coarse_grained_patches(to_matrix({patch, patch, patch, patch, patch}), sent, 0.07);
  const auto b = coarse_grained(to_eigen(patch), sent, 0.07);
  for (std::size_t j = 0; j < a.size(); ++j) EXPECT_NEAR(a[j], b[j], 1e-12);
}

TEST(CoarsePatches, AntipodalPatchesSurfaceNumericError) {
  const std::vector<double> u{0.6, 0.8, 0.0};
  const std::vector<double> v{-0.6, -0.8, 0.0};
  EXPECT_THROW(coarse_grained_patches(to_matrix({u, v}), Matrix::Identity(3, 3), 0.07), NumericError);
}

TEST(CoarsePatches, EmptyPatchSetRejected) {
  EXPECT_THROW(coarse_grained_patches(Matrix(0, 3), Matrix::Identity(3, 3), 0.07), InputError);
}

TEST(CoarsePatches, MatchesMeanFeatureOracle) {
  std::mt19937_64 gen(16);
  for (int trial = 0; trial < 100; ++trial) {
    const auto patches = random_rows(gen, 1 + trial % 9, 10);
    const auto sent = random_rows(gen, 5, 10);
    const auto got = coarse_grained_patches(to_matrix(patches), to_matrix(sent), 0.07);
    const auto want = oracle::coarse(oracle::mean_rows(patches), sent, 0.07);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(got[j], want[j], 1e-9);
  }
}

TEST(Fine, Examples) {
  const std::vector<double> img{0.3, -0.2, 0.9};
  EXPECT_NEAR(fine_grained(to_eigen(img), to_matrix({img, img, img})), 1.0, 1e-15);
  EXPECT_NEAR(fine_grained(Vector::Unit(2, 0), Matrix::Identity(2, 2)), 0.5, 1e-15);
  EXPECT_THROW(fine_grained(Vector::Unit(2, 0), Matrix(0, 2)), InputError);
}

TEST(Fine, SevenRandomWordsMatchLoop) {
  std::mt19937_64 gen(17);
  const Vector img = unit(to_eigen(random_vector(gen, 16)));
  const Matrix words = unit_rows(to_matrix(random_rows(gen, 7, 16)));
  double want = 0.0;
  for (int k = 0; k < 7; ++k) {
    double dot = 0.0;
    for (int i = 0; i < 16; ++i) dot += img[i] * words(k, i);
    want += dot / 7.0;
  }
  EXPECT_NEAR(fine_grained(img, words), want, 1e-9);
}

TEST(Fine, MatchesOracleAndStaysInRange) {
  std::mt19937_64 gen(18);
  for (int trial = 0; trial < 200; ++trial) {
    const auto img = random_vector(gen, 12);
    const auto words = random_rows(gen, 1 + trial % 10, 12);
    const double w = fine_grained(to_eigen(img), to_matrix(words));
    EXPECT_NEAR(w, oracle::fine(img, words), 1e-9);
    EXPECT_GE(w, -1.0);
    EXPECT_LE(w, 1.0);
  }
}

TEST(FinePatches, Examples) {
  const std::vector<double> a{0.3, -0.2, 0.9};
  EXPECT_NEAR(fine_grained_patches(to_matrix({a, a}), to_matrix({a, a})), 1.0, 1e-15);
  EXPECT_NEAR(fine_grained_patches(to_matrix({{1, 0}}), Matrix::Identity(2, 2)), 0.5, 1e-15);
  std::mt19937_64 gen(19);
  const auto patches = random_rows(gen, 5, 9);
  const auto words = random_rows(gen, 7, 9);
  EXPECT_NEAR(fine_grained_patches(to_matrix(patches), to_matrix(words)),
              oracle::fine(oracle::mean_rows(patches), words), 1e-9);
}

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "support.hpp"
#include "tspmgs/scoring.hpp"

using namespace tspmgs;
using namespace testing_support;

namespace {

EmbeddingBundle random_bundle(std::mt19937_64& gen, int n, int L, int K, int d = 16) {
  EmbeddingBundle b;
  b.image = unit(to_eigen(random_vector(gen, d)));
  b.patches = unit_rows(to_matrix(random_rows(gen, n, d)));
  b.sentences = unit_rows(to_matrix(random_rows(gen, L, d)));
  b.words = unit_rows(to_matrix(random_rows(gen, K, d)));
  return b;
}

std::vector<std::vector<double>> rows_of(const Matrix& m) {
  std::vector<std::vector<double>> out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.emplace_back(m.row(r).begin(), m.row(r).end());
  return out;
}

double q_final(const EmbeddingBundle& b, const HeadSettings& s, double alpha) {
  return score_bundle(b, s, {AlphaMode::learned, alpha}).score.q_final;
}

}  // namespace

TEST(ScoreBundle, MatchesOraclePipeline) {
  std::mt19937_64 gen(41);
  for (int trial = 0; trial < 200; ++trial) {
    const int L = trial % 2 ? 5 : 2;
    const auto b = random_bundle(gen, 1 + trial % 6, L, 1 + trial % 7);
    const HeadSettings s{0.07, ImageInputMode::both, TaskKind::perception};
    const double alpha = std::uniform_real_distribution<double>(0, 1)(gen);
    const auto got = score_bundle(b, s, {AlphaMode::learned, alpha});

    const std::vector<double> img(b.image.begin(), b.image.end());
    const auto patches = rows_of(b.patches), sent = rows_of(b.sentences), words = rows_of(b.words);
    const auto pi = oracle::coarse(img, sent, 0.07);
    const auto pp = oracle::coarse(oracle::mean_rows(patches), sent, 0.07);
    const double wi = oracle::fine(img, words), wp = oracle::fine(oracle::mean_rows(patches), words);
    const double want = alpha * oracle::coarse_score(pi) + (1 - alpha) * oracle::coarse_score(pp) +
                        oracle::fine_score(wi, wp, L);
    for (int j = 0; j < L; ++j) {
      EXPECT_NEAR(got.similarity.p_image[j], pi[j], 1e-6);
      EXPECT_NEAR(got.similarity.p_patch[j], pp[j], 1e-6);
    }
    EXPECT_NEAR(got.similarity.w_image, wi, 1e-9);
    EXPECT_NEAR(got.similarity.w_patch, wp, 1e-9);
    EXPECT_NEAR(got.score.q_final, want, 1e-6);
  }
}

TEST(ScoreBundle, SingleInputModes) {
  std::mt19937_64 gen(42);
  const auto b = random_bundle(gen, 5, 5, 4);
  const auto both = score_bundle(b, {0.07, ImageInputMode::both, TaskKind::perception}, {AlphaMode::learned, 0.3});
  const auto img = score_bundle(b, {0.07, ImageInputMode::only_image, TaskKind::perception}, {AlphaMode::learned, 0.3});
  const auto pat = score_bundle(b, {0.07, ImageInputMode::only_patches, TaskKind::perception}, {AlphaMode::learned, 0.3});
  EXPECT_NEAR(img.score.q_final, both.score.q_cg_image + 5 * both.similarity.w_image, 1e-12);
  EXPECT_NEAR(pat.score.q_final, both.score.q_cg_patch + 5 * both.similarity.w_patch, 1e-12);
}

TEST(ScoreBundle, FixedOneIgnoresPatches) {
  std::mt19937_64 gen(43);
  auto b = random_bundle(gen, 5, 5, 4);
  const HeadSettings s{0.07, ImageInputMode::both, TaskKind::perception};
  const auto a = score_bundle(b, s, AlphaPolicy::initial(AlphaMode::fixed_1));
  b.patches = unit_rows(to_matrix(random_rows(gen, 3, 16)));
  const auto c = score_bundle(b, s, AlphaPolicy::initial(AlphaMode::fixed_1));
  // Coarse term drops the patches; only the fine term still sees them.
  EXPECT_EQ(a.score.q_final - a.score.q_fg, c.score.q_final - c.score.q_fg);
}

TEST(ScoreGradient, MatchesFiniteDifferences) {
  std::mt19937_64 gen(44);
  for (auto mode : {ImageInputMode::both, ImageInputMode::only_image, ImageInputMode::only_patches}) {
    for (int trial = 0; trial < 5; ++trial) {
      auto b = random_bundle(gen, 1 + trial, trial % 2 ? 5 : 2, 2 + trial, 8);
      const HeadSettings s{0.1, mode, TaskKind::alignment};
      const double alpha = 0.35;
      const auto g = score_gradient(b, s, alpha);
      const double h = 1e-6;

      auto check = [&](auto& target, const auto& grad, const char* what) {
        for (Eigen::Index i = 0; i < target.size(); ++i) {
          const double keep = target.data()[i];
          target.data()[i] = keep + h;
          const double up = q_final(b, s, alpha);
          target.data()[i] = keep - h;
          const double down = q_final(b, s, alpha);
          target.data()[i] = keep;
          EXPECT_NEAR(grad.data()[i], (up - down) / (2 * h), 1e-6) << what << ' ' << to_string(mode) << ' ' << i;
        }
      };
      check(b.image, g.image, "image");
      check(b.patches, g.patches, "patches");
      check(b.sentences, g.sentences, "sentences");
      check(b.words, g.words, "words");
      const double da = (q_final(b, s, alpha + h) - q_final(b, s, alpha - h)) / (2 * h);
      EXPECT_NEAR(g.alpha, da, 1e-6) << to_string(mode);
    }
  }
}

TEST(ImageInput, ParseRoundTrip) {
  for (auto m : {ImageInputMode::both, ImageInputMode::only_image, ImageInputMode::only_patches}) {
    EXPECT_EQ(parse_image_input(to_string(m)), m);
  }
}

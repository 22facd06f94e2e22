#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "support.hpp"
#include "tspmgs/errors.hpp"
#include "tspmgs/metrics.hpp"

using namespace tspmgs;

TEST(Srcc, Examples) {
  const std::vector<double> t{1, 2, 3, 4, 5};
  EXPECT_DOUBLE_EQ(srcc(t, t), 1.0);
  const std::vector<double> rev{5, 4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(srcc(rev, t), -1.0);
  const std::vector<double> p{1, 2, 3, 5, 4};
  EXPECT_NEAR(srcc(p, t), 0.9, 1e-15);
  EXPECT_EQ(srcc_closed_form(p, t), 0.9);
}

TEST(Srcc, Errors) {
  const std::vector<double> one{1.0};
  EXPECT_THROW(srcc(one, one), CorrelationError);
  const std::vector<double> flat{2, 2, 2}, t{1, 2, 3};
  EXPECT_THROW(srcc(flat, t), CorrelationError);
  const std::vector<double> two{1, 2};
  EXPECT_THROW(srcc(two, t), CorrelationError);
  const std::vector<double> tied{1, 1, 2};
  EXPECT_THROW(srcc_closed_form(tied, t), InputError);
}

TEST(Srcc, AverageRanksForTies) {
  const std::vector<double> v{10, 20, 20, 5};
  EXPECT_EQ(average_ranks(v), (std::vector<double>{2, 3.5, 3.5, 1}));
}

TEST(Srcc, ClosedFormAgreesOnTieFreeData) {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + trial % 49;
    const auto a = testing_support::random_vector(gen, n);
    const auto b = testing_support::random_vector(gen, n);
    EXPECT_NEAR(srcc(a, b), srcc_closed_form(a, b), 1e-12);
  }
}

TEST(Srcc, MatchesOracleWithTies) {
  std::mt19937_64 gen(22);
  std::uniform_int_distribution<int> small(0, 6);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 3 + trial % 48;
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = small(gen);
      b[i] = small(gen);
    }
    if (std::all_of(a.begin(), a.end(), [&](double x) { return x == a[0]; }) ||
        std::all_of(b.begin(), b.end(), [&](double x) { return x == b[0]; })) {
      continue;
    }
    EXPECT_NEAR(srcc(a, b), oracle::spearman(a, b), 1e-9);
  }
}

TEST(Plcc, Examples) {
  const std::vector<double> t{0.5, 1.5, 2.0, 4.0};
  std::vector<double> affine, neg;
  for (double x : t) {
    affine.push_back(2 * x + 3);
    neg.push_back(-x);
  }
  EXPECT_NEAR(plcc(affine, t), 1.0, 1e-15);
  EXPECT_NEAR(plcc(neg, t), -1.0, 1e-15);
  const std::vector<double> p{1, 2, 4}, q{1, 2, 3};
  // Deviations (-4/3, -1/3, 5/3) and (-1, 0, 1): r = 3 / sqrt(42/9 * 2) = 9 / sqrt(84).
  EXPECT_NEAR(plcc(p, q), 9.0 / std::sqrt(84.0), 1e-15);
  EXPECT_NEAR(plcc(p, q), 0.9820, 5e-5);
}

TEST(Plcc, Errors) {
  const std::vector<double> flat{3, 3, 3}, t{1, 2, 3};
  EXPECT_THROW(plcc(flat, t), CorrelationError);
  EXPECT_THROW(plcc(t, flat), CorrelationError);
}

TEST(Plcc, MatchesOracle) {
  std::mt19937_64 gen(23);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + trial % 49;
    const auto a = testing_support::random_vector(gen, n, -5, 5);
    const auto b = testing_support::random_vector(gen, n, 0, 5);
    const double r = plcc(a, b);
    EXPECT_NEAR(r, oracle::pearson(a, b), 1e-9);
    EXPECT_LE(std::abs(r), 1.0);
  }
}

TEST(Plcc, LogisticFitImprovesMonotoneNonlinearData) {
  std::vector<double> pred, mos;
  for (int i = 0; i < 40; ++i) {
    const double x = -4.0 + 8.0 * i / 39.0;
    pred.push_back(x);
    mos.push_back(5.0 / (1.0 + std::exp(-1.7 * x)));
  }
  const double linear = plcc(pred, mos);
  const double fitted = plcc_logistic(pred, mos);
  EXPECT_GT(fitted, linear);
  EXPECT_NEAR(fitted, 1.0, 1e-6);
}

TEST(EvalResultTest, Assembles) {
  const auto r = make_eval_result({1, 2, 3}, {1, 2, 4}, TaskKind::alignment);
  EXPECT_EQ(r.task, TaskKind::alignment);
  EXPECT_DOUBLE_EQ(r.srcc, 1.0);
  EXPECT_NEAR(r.plcc, 9.0 / std::sqrt(84.0), 1e-15);
}

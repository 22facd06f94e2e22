#include "tspmgs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unsupported/Eigen/NonLinearOptimization>

#include "tspmgs/errors.hpp"

namespace tspmgs {
namespace {

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw CorrelationError("correlation arguments differ in length");
  if (a.size() < 2) throw CorrelationError("correlation needs at least two points");
}

double logistic4(const Eigen::VectorXd& beta, double x) {
  const double scale = std::max(std::abs(beta[3]), 1e-12);
  return beta[1] + (beta[0] - beta[1]) / (1.0 + std::exp(-(x - beta[2]) / scale));
}

struct LogisticResidual {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  std::span<const double> x;
  std::span<const double> y;

  int inputs() const { return 4; }
  int values() const { return static_cast<int>(x.size()); }

  int operator()(const Eigen::VectorXd& beta, Eigen::VectorXd& residual) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
      residual[static_cast<Eigen::Index>(i)] = logistic4(beta, x[i]) - y[i];
    }
    return 0;
  }
};

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 (0-based) share rank mean((i+1)..j)
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double plcc(std::span<const double> pred, std::span<const double> target) {
  check_pair(pred, target);
  const double n = static_cast<double>(pred.size());
  const double mp = std::accumulate(pred.begin(), pred.end(), 0.0) / n;
  const double mt = std::accumulate(target.begin(), target.end(), 0.0) / n;
  double cov = 0.0;
  double vp = 0.0;
  double vt = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double dp = pred[i] - mp;
    const double dt = target[i] - mt;
    cov += dp * dt;
    vp += dp * dp;
    vt += dt * dt;
  }
  if (vp == 0.0 || vt == 0.0) throw CorrelationError("correlation undefined for a constant vector");
  return std::clamp(cov / std::sqrt(vp * vt), -1.0, 1.0);
}

double srcc(std::span<const double> pred, std::span<const double> target) {
  check_pair(pred, target);
  const auto rp = average_ranks(pred);
  const auto rt = average_ranks(target);
  return plcc(rp, rt);
}

double srcc_closed_form(std::span<const double> pred, std::span<const double> target) {
  check_pair(pred, target);
  auto has_ties = [](std::span<const double> v) {
    std::vector<double> sorted(v.begin(), v.end());
    std::sort(sorted.begin(), sorted.end());
    return std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
  };
  if (has_ties(pred) || has_ties(target)) throw InputError("closed-form SRCC is undefined with ties");
  const auto rp = average_ranks(pred);
  const auto rt = average_ranks(target);
  double d2 = 0.0;
  for (std::size_t i = 0; i < rp.size(); ++i) d2 += (rp[i] - rt[i]) * (rp[i] - rt[i]);
  const double m = static_cast<double>(rp.size());
  return 1.0 - 6.0 * d2 / (m * (m * m - 1.0));
}

double plcc_logistic(std::span<const double> pred, std::span<const double> target) {
  check_pair(pred, target);
  if (pred.size() < 5) return plcc(pred, target);
  const auto [tmin, tmax] = std::minmax_element(target.begin(), target.end());
  const double n = static_cast<double>(pred.size());
  const double mean = std::accumulate(pred.begin(), pred.end(), 0.0) / n;
  double var = 0.0;
  for (double p : pred) var += (p - mean) * (p - mean);
  const double sd = std::sqrt(var / n);
  if (sd == 0.0) throw CorrelationError("correlation undefined for a constant vector");

  Eigen::VectorXd beta(4);
  beta << *tmax, *tmin, mean, sd / 4.0;
  LogisticResidual residual{pred, target};
  Eigen::NumericalDiff<LogisticResidual> functor(residual);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<LogisticResidual>> solver(functor);
  solver.parameters.maxfev = 2000;
  solver.minimize(beta);

  std::vector<double> mapped(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) mapped[i] = logistic4(beta, pred[i]);
  return plcc(mapped, target);
}

EvalResult make_eval_result(std::vector<double> predictions, std::vector<double> targets,
                            TaskKind task, bool logistic_plcc) {
  EvalResult r;
  r.srcc = srcc(predictions, targets);
  r.plcc = logistic_plcc ? plcc_logistic(predictions, targets) : plcc(predictions, targets);
  r.predictions = std::move(predictions);
  r.targets = std::move(targets);
  r.task = task;
  return r;
}

}  // namespace tspmgs

#pragma once

#include <span>
#include <vector>

#include "tspmgs/prompting.hpp"

namespace tspmgs {

struct EvalResult {
  std::vector<double> predictions;
  std::vector<double> targets;
  double srcc = 0.0;
  double plcc = 0.0;
  TaskKind task = TaskKind::perception;
};

/// 1-based fractional ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson linear correlation. Throws CorrelationError for fewer than two
/// points, mismatched lengths, or a zero-variance argument.
double plcc(std::span<const double> pred, std::span<const double> target);

/// Spearman rank correlation: Pearson correlation of the average ranks, so
/// ties are handled and the tie-free case equals the closed form.
double srcc(std::span<const double> pred, std::span<const double> target);

/// The closed form 1 - 6 * sum(d^2) / (M (M^2 - 1)). Only defined without
/// ties; throws InputError if either argument contains one.
double srcc_closed_form(std::span<const double> pred, std::span<const double> target);

/// PLCC after fitting the 4-parameter logistic map from predictions to
/// targets. Not used by default.
double plcc_logistic(std::span<const double> pred, std::span<const double> target);

/// Bundles predictions, targets and both correlations.
EvalResult make_eval_result(std::vector<double> predictions, std::vector<double> targets,
                            TaskKind task, bool logistic_plcc = false);

}  // namespace tspmgs

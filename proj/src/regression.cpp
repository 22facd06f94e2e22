#include "tspmgs/regression.hpp"

#include <cmath>
#include <string>

#include "tspmgs/errors.hpp"

namespace tspmgs {

std::string_view to_string(AlphaMode mode) {
  switch (mode) {
    case AlphaMode::fixed_0:
      return "fixed_0";
    case AlphaMode::fixed_1:
      return "fixed_1";
    case AlphaMode::learned:
      return "learned";
  }
  return "unknown";
}

AlphaMode parse_alpha_mode(std::string_view text) {
  if (text == "fixed_0" || text == "0") return AlphaMode::fixed_0;
  if (text == "fixed_1" || text == "1") return AlphaMode::fixed_1;
  if (text == "learned") return AlphaMode::learned;
  throw ConfigError("unknown alpha mode '" + std::string(text) + "' (expected fixed_0|fixed_1|learned)");
}

AlphaPolicy AlphaPolicy::initial(AlphaMode mode) {
  switch (mode) {
    case AlphaMode::fixed_0:
      return {mode, 0.0};
    case AlphaMode::fixed_1:
      return {mode, 1.0};
    case AlphaMode::learned:
      break;
  }
  return {AlphaMode::learned, alpha_from_logit(0.0)};
}

double alpha_from_logit(double logit) { return 1.0 / (1.0 + std::exp(-logit)); }

double alpha_logit_derivative(double logit) {
  const double a = alpha_from_logit(logit);
  return a * (1.0 - a);
}

double coarse_score(std::span<const double> p) {
  const auto levels = p.size();
  if (levels < 2) throw ConfigError("coarse score needs at least two quality levels");
  double total = 0.0;
  double expected = 0.0;
  for (std::size_t j = 0; j < levels; ++j) {
    if (!(p[j] >= 0.0 && p[j] <= 1.0)) throw InputError("level probability outside [0, 1]");
    total += p[j];
    expected += static_cast<double>(j + 1) * p[j];
  }
  if (std::abs(total - 1.0) > 1e-6) throw InputError("level probabilities do not sum to 1");
  const double l = static_cast<double>(levels);
  return l / (l - 1.0) * (expected - 1.0);
}

double fine_score(double w_image, double w_patch, int levels) {
  return (w_image + w_patch) / 2.0 * static_cast<double>(levels);
}

QualityScore fuse(double q_cg_image, double q_cg_patch, double q_fg, const AlphaPolicy& policy,
                  TaskKind task) {
  const double a = policy.value;
  if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if ((policy.mode == AlphaMode::fixed_0 && a != 0.0) ||
      (policy.mode == AlphaMode::fixed_1 && a != 1.0)) {
    throw ConfigError("fixed alpha mode does not match its value");
  }
  QualityScore s;
  s.q_cg_image = q_cg_image;
  s.q_cg_patch = q_cg_patch;
  s.q_fg = q_fg;
  s.alpha = a;
  s.task = task;
  s.q_final = a * q_cg_image + (1.0 - a) * q_cg_patch + q_fg;
  return s;
}

double mae_loss(double q, double mos) {
  if (!std::isfinite(q) || !std::isfinite(mos)) throw NumericError("non-finite value in MAE loss");
  return std::abs(q - mos);
}

double batch_mae(std::span<const double> q, std::span<const double> mos) {
  if (q.size() != mos.size()) throw InputError("prediction/target length mismatch");
  if (q.empty()) throw InputError("empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) total += mae_loss(q[i], mos[i]);
  return total / static_cast<double>(q.size());
}

double mae_grad(double q, double mos) {
  if (q > mos) return 1.0;
  if (q < mos) return -1.0;
  return 0.0;
}

}  // namespace tspmgs

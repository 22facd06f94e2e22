#pragma once

#include <span>
#include <string_view>

#include "tspmgs/prompting.hpp"

namespace tspmgs {

enum class AlphaMode { fixed_0, fixed_1, learned };

std::string_view to_string(AlphaMode mode);
AlphaMode parse_alpha_mode(std::string_view text);

/// Weight between the image-level and patch-level coarse scores.
struct AlphaPolicy {
  AlphaMode mode = AlphaMode::learned;
  double value = 0.5;

  /// Fixed modes pin the value; learned starts at 0.5.
  static AlphaPolicy initial(AlphaMode mode);
};

/// Learned alpha is a sigmoid of an unconstrained logit, so it never leaves [0, 1].
double alpha_from_logit(double logit);
/// d alpha / d logit at the given logit.
double alpha_logit_derivative(double logit);

struct QualityScore {
  double q_cg_image = 0.0;
  double q_cg_patch = 0.0;
  double q_fg = 0.0;
  double q_final = 0.0;
  double alpha = 0.5;
  TaskKind task = TaskKind::perception;
};

/// Expected level under p rescaled so the worst level maps to 0 and the best
/// to L: L/(L-1) * (sum_j j*p_j - 1) with 1-based j.
double coarse_score(std::span<const double> p);

/// Word-level score ((w_image + w_patch) / 2) * L.
double fine_score(double w_image, double w_patch, int levels);

/// alpha * q_cg_image + (1 - alpha) * q_cg_patch + q_fg. The result is not clamped.
QualityScore fuse(double q_cg_image, double q_cg_patch, double q_fg, const AlphaPolicy& policy,
                  TaskKind task = TaskKind::perception);

/// |q - mos|. Throws NumericError on non-finite input.
double mae_loss(double q, double mos);

/// Mean of mae_loss over paired spans of equal, nonzero length.
double batch_mae(std::span<const double> q, std::span<const double> mos);

/// Subgradient of |q - mos| with respect to q (0 at the kink).
double mae_grad(double q, double mos);

}  // namespace tspmgs

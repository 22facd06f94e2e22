#pragma once

#include <string_view>

#include "tspmgs/encoder.hpp"
#include "tspmgs/regression.hpp"
#include "tspmgs/similarity.hpp"

namespace tspmgs {

/// Which image views feed the score.
enum class ImageInputMode {
  both,          // alpha-weighted coarse terms, fine term averages image and patches
  only_image,    // resized image alone: Q = Q_cg^I + L * w_image
  only_patches,  // patches alone:       Q = Q_cg^P + L * w_patch
};

std::string_view to_string(ImageInputMode mode);
ImageInputMode parse_image_input(std::string_view text);

struct HeadSettings {
  double temperature = 0.07;
  ImageInputMode image_input = ImageInputMode::both;
  TaskKind task = TaskKind::perception;
};

struct ScoredSample {
  SimilarityReport similarity;
  QualityScore score;
};

/// Coarse/fine similarities, component scores and the fused score for one
/// embedding bundle.
ScoredSample score_bundle(const EmbeddingBundle& bundle, const HeadSettings& settings,
                          const AlphaPolicy& alpha);

/// d q_final / d (every embedding entry, and alpha). Embeddings are treated as
/// free vectors, i.e. the derivative of the cosine formula including its norms.
struct BundleGradient {
  Vector image;
  Matrix patches;
  Matrix sentences;
  Matrix words;
  double alpha = 0.0;
};

BundleGradient score_gradient(const EmbeddingBundle& bundle, const HeadSettings& settings,
                              double alpha);

}  // namespace tspmgs

#pragma once

#include <vector>

#include "tspmgs/tensor.hpp"

namespace tspmgs {

/// Multi-granularity similarity between one image and its prompts.
struct SimilarityReport {
  std::vector<double> p_image;  // level probabilities from the resized image
  std::vector<double> p_patch;  // level probabilities from the mean patch feature
  double w_image = 0.0;         // mean word-level cosine, resized image
  double w_patch = 0.0;         // mean word-level cosine, mean patch feature
  double temperature = 1.0;
};

/// Cosine of the angle between u and v. Throws NumericError on a zero vector
/// and InputError on a dimension mismatch.
double cosine(const Vector& u, const Vector& v);

/// Numerically stable softmax of logits / temperature.
std::vector<double> softmax(const std::vector<double>& logits, double temperature);

/// Softmax over the cosines between an image embedding and each sentence row.
/// Requires at least two rows and temperature > 0 (ConfigError otherwise).
std::vector<double> coarse_grained(const Vector& image, const Matrix& sentences, double temperature);

/// Arithmetic mean of the patch rows. The result is deliberately not
/// re-normalized: every consumer goes through cosine(), which divides by the
/// norm. Throws InputError on an empty matrix.
Vector mean_patch(const Matrix& patches);

/// coarse_grained applied to the mean patch feature.
std::vector<double> coarse_grained_patches(const Matrix& patches, const Matrix& sentences,
                                           double temperature);

/// Mean cosine between the image embedding and each word row (K >= 1).
double fine_grained(const Vector& image, const Matrix& words);

/// fine_grained applied to the mean patch feature.
double fine_grained_patches(const Matrix& patches, const Matrix& words);

}  // namespace tspmgs

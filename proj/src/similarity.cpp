#include "tspmgs/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tspmgs/errors.hpp"

namespace tspmgs {

double cosine(const Vector& u, const Vector& v) {
  if (u.size() != v.size()) {
    throw InputError("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                     std::to_string(v.size()) + ")");
  }
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) throw NumericError("cosine: zero vector");
  return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

std::vector<double> softmax(const std::vector<double>& logits, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("softmax temperature must be positive");
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double top = *std::max_element(logits.begin(), logits.end()) / temperature;
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] / temperature - top);
    total += out[i];
  }
  for (auto& p : out) p /= total;
  return out;
}

std::vector<double> coarse_grained(const Vector& image, const Matrix& sentences, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (sentences.rows() < 2) throw ConfigError("coarse-grained similarity needs at least two levels");
  std::vector<double> logits(static_cast<std::size_t>(sentences.rows()));
  for (Eigen::Index j = 0; j < sentences.rows(); ++j) {
    logits[static_cast<std::size_t>(j)] = cosine(image, sentences.row(j).transpose());
  }
  return softmax(logits, temperature);
}

Vector mean_patch(const Matrix& patches) {
  if (patches.rows() == 0) throw InputError("empty patch set");
  return patches.colwise().mean().transpose();
}

std::vector<double> coarse_grained_patches(const Matrix& patches, const Matrix& sentences,
                                           double temperature) {
  return coarse_grained(mean_patch(patches), sentences, temperature);
}

double fine_grained(const Vector& image, const Matrix& words) {
  if (words.rows() == 0) throw InputError("fine-grained similarity needs at least one word");
  double sum = 0.0;
  for (Eigen::Index k = 0; k < words.rows(); ++k) sum += cosine(image, words.row(k).transpose());
  return sum / static_cast<double>(words.rows());
}

double fine_grained_patches(const Matrix& patches, const Matrix& words) {
  return fine_grained(mean_patch(patches), words);
}

}  // namespace tspmgs

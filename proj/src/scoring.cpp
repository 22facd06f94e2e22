#include "tspmgs/scoring.hpp"

#include <string>
#include <vector>

#include "tspmgs/errors.hpp"

namespace tspmgs {
namespace {

struct Weights {
  double coarse_image;
  double coarse_patch;
  double fine_image;
  double fine_patch;
};

Weights weights_for(ImageInputMode mode, double alpha, int levels) {
  const double l = static_cast<double>(levels);
  switch (mode) {
    case ImageInputMode::only_image:
      return {1.0, 0.0, l, 0.0};
    case ImageInputMode::only_patches:
      return {0.0, 1.0, 0.0, l};
    case ImageInputMode::both:
      break;
  }
  return {alpha, 1.0 - alpha, l / 2.0, l / 2.0};
}

// d cos(a, b) / da
Vector cosine_grad(const Vector& a, const Vector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw NumericError("cosine: zero vector");
  const double c = a.dot(b) / (na * nb);
  return b / (na * nb) - c * a / (na * na);
}

// d Q_cg / d logit_j for softmax(logits / temperature).
std::vector<double> coarse_logit_grad(const std::vector<double>& p, double temperature) {
  const double l = static_cast<double>(p.size());
  const double scale = l / (l - 1.0);
  double mean_c = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) mean_c += scale * static_cast<double>(j + 1) * p[j];
  std::vector<double> g(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    g[j] = p[j] * (scale * static_cast<double>(j + 1) - mean_c) / temperature;
  }
  return g;
}

}  // namespace

std::string_view to_string(ImageInputMode mode) {
  switch (mode) {
    case ImageInputMode::both:
      return "both";
    case ImageInputMode::only_image:
      return "only_image";
    case ImageInputMode::only_patches:
      return "only_patches";
  }
  return "unknown";
}

ImageInputMode parse_image_input(std::string_view text) {
  if (text == "both") return ImageInputMode::both;
  if (text == "only_image") return ImageInputMode::only_image;
  if (text == "only_patches") return ImageInputMode::only_patches;
  throw ConfigError("unknown image input '" + std::string(text) +
                    "' (expected both|only_image|only_patches)");
}

ScoredSample score_bundle(const EmbeddingBundle& bundle, const HeadSettings& settings,
                          const AlphaPolicy& alpha) {
  ScoredSample out;
  auto& sim = out.similarity;
  sim.temperature = settings.temperature;
  sim.p_image = coarse_grained(bundle.image, bundle.sentences, settings.temperature);
  sim.p_patch = coarse_grained_patches(bundle.patches, bundle.sentences, settings.temperature);
  sim.w_image = fine_grained(bundle.image, bundle.words);
  sim.w_patch = fine_grained_patches(bundle.patches, bundle.words);

  const int levels = static_cast<int>(bundle.sentences.rows());
  const double q_image = coarse_score(sim.p_image);
  const double q_patch = coarse_score(sim.p_patch);
  switch (settings.image_input) {
    case ImageInputMode::both:
      out.score = fuse(q_image, q_patch, fine_score(sim.w_image, sim.w_patch, levels), alpha,
                       settings.task);
      break;
    case ImageInputMode::only_image:
      out.score = fuse(q_image, q_patch, fine_score(sim.w_image, sim.w_image, levels),
                       AlphaPolicy::initial(AlphaMode::fixed_1), settings.task);
      break;
    case ImageInputMode::only_patches:
      out.score = fuse(q_image, q_patch, fine_score(sim.w_patch, sim.w_patch, levels),
                       AlphaPolicy::initial(AlphaMode::fixed_0), settings.task);
      break;
  }
  return out;
}

BundleGradient score_gradient(const EmbeddingBundle& bundle, const HeadSettings& settings,
                              double alpha) {
  const int levels = static_cast<int>(bundle.sentences.rows());
  const Weights w = weights_for(settings.image_input, alpha, levels);
  const Vector mean = mean_patch(bundle.patches);

  BundleGradient g;
  g.image = Vector::Zero(bundle.image.size());
  g.patches = Matrix::Zero(bundle.patches.rows(), bundle.patches.cols());
  g.sentences = Matrix::Zero(bundle.sentences.rows(), bundle.sentences.cols());
  g.words = Matrix::Zero(bundle.words.rows(), bundle.words.cols());
  Vector g_mean = Vector::Zero(mean.size());

  const auto p_image = coarse_grained(bundle.image, bundle.sentences, settings.temperature);
  const auto p_patch = coarse_grained(mean, bundle.sentences, settings.temperature);
  const auto d_image = coarse_logit_grad(p_image, settings.temperature);
  const auto d_patch = coarse_logit_grad(p_patch, settings.temperature);
  for (Eigen::Index j = 0; j < bundle.sentences.rows(); ++j) {
    const Vector t = bundle.sentences.row(j).transpose();
    const double gi = w.coarse_image * d_image[static_cast<std::size_t>(j)];
    const double gp = w.coarse_patch * d_patch[static_cast<std::size_t>(j)];
    g.image += gi * cosine_grad(bundle.image, t);
    g_mean += gp * cosine_grad(mean, t);
    g.sentences.row(j) += (gi * cosine_grad(t, bundle.image) + gp * cosine_grad(t, mean)).transpose();
  }

  const double k = static_cast<double>(bundle.words.rows());
  for (Eigen::Index r = 0; r < bundle.words.rows(); ++r) {
    const Vector word = bundle.words.row(r).transpose();
    const double fi = w.fine_image / k;
    const double fp = w.fine_patch / k;
    g.image += fi * cosine_grad(bundle.image, word);
    g_mean += fp * cosine_grad(mean, word);
    g.words.row(r) += (fi * cosine_grad(word, bundle.image) + fp * cosine_grad(word, mean)).transpose();
  }

  g.patches.rowwise() = (g_mean / static_cast<double>(bundle.patches.rows())).transpose();
  if (settings.image_input == ImageInputMode::both) {
    g.alpha = coarse_score(p_image) - coarse_score(p_patch);
  }
  return g;
}

}  // namespace tspmgs

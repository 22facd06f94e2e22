#include "tspmgs/encoder.hpp"

#include <cmath>
#include <string>

#include "tspmgs/compact_encoder.hpp"
#include "tspmgs/errors.hpp"

namespace tspmgs {

std::string_view to_string(WordMode mode) {
  return mode == WordMode::contextual ? "contextual" : "per_word";
}

WordMode parse_word_mode(std::string_view text) {
  if (text == "contextual") return WordMode::contextual;
  if (text == "per_word") return WordMode::per_word;
  throw ConfigError("unknown word mode '" + std::string(text) + "' (expected contextual|per_word)");
}

void BackendConfig::validate() const {
  if (input_size <= 0) throw ConfigError("input_size must be positive");
  if (joint_dim <= 0) throw ConfigError("joint_dim must be positive");
  if (image_hidden <= 0 || text_width <= 0) throw ConfigError("tower widths must be positive");
  if (context_length < 3) throw ConfigError("context_length must be at least 3");
  if (!(logit_scale > 0.0)) throw ConfigError("logit_scale must be positive");
}

void EmbeddingBundle::validate(int dim) const {
  auto check_rows = [dim](const Matrix& m, const char* what) {
    if (m.cols() != dim) throw NumericError(std::string(what) + " has the wrong dimension");
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      if (std::abs(m.row(r).norm() - 1.0) > 1e-5) {
        throw NumericError(std::string(what) + " row is not unit norm");
      }
    }
  };
  if (image.size() != dim) throw NumericError("image embedding has the wrong dimension");
  if (std::abs(image.norm() - 1.0) > 1e-5) throw NumericError("image embedding is not unit norm");
  if (patches.rows() < 1) throw NumericError("no patch embeddings");
  if (sentences.rows() < 2) throw NumericError("fewer than two sentence embeddings");
  if (words.rows() < 1) throw NumericError("no word embeddings");
  check_rows(patches, "patch embedding");
  check_rows(sentences, "sentence embedding");
  check_rows(words, "word embedding");
}

Matrix DualEncoder::encode_patches(std::span<const ImageInput> patches) const {
  Matrix out(static_cast<Eigen::Index>(patches.size()), joint_dim());
  for (std::size_t i = 0; i < patches.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = encode_image(patches[i]).transpose();
  }
  return out;
}

EmbeddingBundle embed(const DualEncoder& encoder, const ImageInput& img, const PromptSet& prompts,
                      int patches_n) {
  EmbeddingBundle b;
  b.image = encoder.encode_image(img);
  const auto patches = crop_patches(img, patches_n, encoder.config().input_size);
  b.patches = encoder.encode_patches(patches);
  b.sentences = encoder.encode_sentences(prompts.sentences);
  b.words = encoder.encode_words(prompts.initial_prompt);
  return b;
}

std::unique_ptr<DualEncoder> make_backend(const BackendConfig& cfg) {
  if (cfg.model_name != "compact" && cfg.model_name != "stub") {
    throw BackendError("backend '" + cfg.model_name +
                       "' is not available in this build (supported: compact, stub)");
  }
  if (cfg.device != "cpu") throw BackendError("device '" + cfg.device + "' is not available (supported: cpu)");
  const bool remote = cfg.weights.rfind("http://", 0) == 0 || cfg.weights.rfind("https://", 0) == 0;
  if (remote) {
    throw BackendError(cfg.allow_network
                           ? "remote weights are not supported; download them and pass a local path"
                           : "weights point to a URL but network access is disabled");
  }
  auto model = std::make_unique<CompactDualEncoder>(cfg);
  if (!cfg.weights.empty()) model->load_weights(cfg.weights);
  return model;
}

}  // namespace tspmgs

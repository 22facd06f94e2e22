#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tspmgs/image.hpp"
#include "tspmgs/prompting.hpp"
#include "tspmgs/tensor.hpp"
#include "tspmgs/tokenizer.hpp"

namespace tspmgs {

/// How per-word features of the initial prompt are produced.
enum class WordMode {
  contextual,  // projected token states from one pass over the whole prompt
  per_word,    // each word encoded as its own text
};

std::string_view to_string(WordMode mode);
WordMode parse_word_mode(std::string_view text);

struct BackendConfig {
  std::string model_name = "compact";
  int input_size = 224;
  int joint_dim = 64;
  std::string device = "cpu";
  std::string weights;  // optional weights blob; empty means seeded initialization

  int image_hidden = 128;
  int text_width = 64;
  int vocab_size = 8192;
  int context_length = 77;
  /// Multiplier applied to cosines before the level softmax (1 / temperature).
  double logit_scale = 1.0 / 0.07;
  WordMode word_mode = WordMode::contextual;
  std::uint64_t init_seed = 20240501;
  bool allow_network = false;

  /// Throws ConfigError on non-positive sizes.
  void validate() const;
};

/// Unit-normalized joint-space embeddings for one image and its prompts.
struct EmbeddingBundle {
  Vector image;      // D
  Matrix patches;    // N x D
  Matrix sentences;  // L x D, ascending quality
  Matrix words;      // K x D

  /// Throws NumericError unless every row is unit norm within 1e-5 and all
  /// blocks share dimension `dim`.
  void validate(int dim) const;
};

/// Inference surface of a dual encoder. Every method is const and touches no
/// mutable state, so one instance may be shared by concurrent readers. Anything
/// that mutates weights (training, loading) needs exclusive ownership.
class DualEncoder {
 public:
  virtual ~DualEncoder() = default;

  virtual const BackendConfig& config() const = 0;
  virtual const Tokenizer& tokenizer() const = 0;
  int joint_dim() const { return config().joint_dim; }
  double logit_scale() const { return config().logit_scale; }

  /// Embedding of the image resized to input_size x input_size.
  virtual Vector encode_image(const ImageInput& img) const = 0;
  /// One row per patch, each identical to encode_image on that patch.
  virtual Matrix encode_patches(std::span<const ImageInput> patches) const;
  /// One row per sentence (end-of-text state).
  virtual Matrix encode_sentences(std::span<const std::string> sentences) const = 0;
  /// One row per non-special token of the prompt. Throws InputError if none.
  virtual Matrix encode_words(std::string_view initial_prompt) const = 0;
};

/// Runs every encoder call needed to score one image against a prompt set.
EmbeddingBundle embed(const DualEncoder& encoder, const ImageInput& img, const PromptSet& prompts,
                      int patches_n);

/// Builds the backend named by cfg.model_name. "compact" (alias "stub") is the
/// built-in trainable encoder. Throws BackendError for anything else or when
/// weights cannot be loaded.
std::unique_ptr<DualEncoder> make_backend(const BackendConfig& cfg);

}  // namespace tspmgs

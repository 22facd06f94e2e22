#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tspmgs/encoder.hpp"

namespace tspmgs {

/// Fixed (non-trainable) descriptor of a prepared image: per-cell colour,
/// contrast, gradient and Laplacian statistics on a 7 x 7 grid.
struct ImageFeatures {
  Vector values;
};

/// Activations kept from an image-tower forward pass.
struct ImageTrace {
  Vector features;
  Vector hidden;  // tanh activations
  Vector raw;     // projection before normalization
  Vector unit;
};

/// Activations kept from a text-tower forward pass.
struct TextTrace {
  TokenSequence tokens;
  Matrix inputs;                    // T x W, token + position embeddings
  Vector context;                   // mean of inputs
  Matrix hidden;                    // T x W
  std::vector<std::size_t> outputs; // token positions that were projected
  Matrix raw;                       // |outputs| x D
  Matrix unit;                      // |outputs| x D
};

/// Which parameter groups receive updates.
struct TrainableMask {
  bool image_tower = true;
  bool text_tower = true;
};

/// Small trainable dual encoder.
///
/// Image tower: fixed grid descriptor -> tanh MLP -> linear projection.
/// Text tower: hashed token embedding + learned position embedding, one
/// context-mixing tanh layer (each token sees the mean of the sequence), and a
/// linear projection shared by sentence (end-of-text state) and word outputs.
/// All outputs are l2-normalized.
///
/// Parameters live in one flat vector so the optimizer and the checkpoint
/// format treat them uniformly. Gradients use the same layout.
class CompactDualEncoder final : public DualEncoder {
 public:
  explicit CompactDualEncoder(BackendConfig cfg);

  const BackendConfig& config() const override { return cfg_; }
  const Tokenizer& tokenizer() const override { return tokenizer_; }

  Vector encode_image(const ImageInput& img) const override;
  Matrix encode_sentences(std::span<const std::string> sentences) const override;
  Matrix encode_words(std::string_view initial_prompt) const override;

  // Training surface. Forward passes are const; backward passes only write
  // into the caller's gradient buffer.

  ImageFeatures image_features(const ImageInput& img) const;
  ImageTrace forward_image(const ImageFeatures& features) const;
  void backward_image(const ImageTrace& trace, const Vector& grad_unit, Vector& grad) const;

  /// Projects the end-of-text state only.
  TextTrace forward_sentence(const TokenSequence& tokens) const;
  /// Projects every word position (contextual mode).
  TextTrace forward_words(const TokenSequence& tokens) const;
  /// grad_unit holds one row per entry of trace.outputs.
  void backward_text(const TextTrace& trace, const Matrix& grad_unit, Vector& grad) const;

  const Vector& parameters() const { return params_; }
  Vector& mutable_parameters() { return params_; }
  std::size_t parameter_count() const { return static_cast<std::size_t>(params_.size()); }
  /// 1 for trainable entries, 0 for frozen ones.
  Vector update_mask(const TrainableMask& mask) const;

  void save_weights(const std::filesystem::path& path) const;
  /// Throws BackendError on a missing, corrupt or mismatched blob.
  void load_weights(const std::filesystem::path& path);

 private:
  struct Block {
    Eigen::Index offset = 0;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    Eigen::Index size() const { return rows * cols; }
  };
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;

  ConstMatrixMap view(const Block& b) const;
  static MatrixMap view(Vector& buffer, const Block& b);
  TextTrace forward_text(const TokenSequence& tokens, std::vector<std::size_t> outputs) const;
  void initialize();

  BackendConfig cfg_;
  Tokenizer tokenizer_;
  int feature_dim_ = 0;

  Block img_w1_, img_b1_, img_w2_;
  Block tok_emb_, pos_emb_, ctx_self_, ctx_mean_, ctx_bias_, txt_proj_;
  Eigen::Index image_end_ = 0;  // image blocks occupy [0, image_end_)
  Vector params_;
};

}  // namespace tspmgs

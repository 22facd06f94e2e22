#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tspmgs/compact_encoder.hpp"
#include "tspmgs/dataset.hpp"
#include "tspmgs/metrics.hpp"
#include "tspmgs/scoring.hpp"

namespace tspmgs {

enum class SchedulerKind {
  cosine_restarts,   // cosine decay restarted every `scheduler_period` epochs
  cosine_annealing,  // closed-form cosine with half-period `scheduler_period`
};

std::string_view to_string(SchedulerKind kind);
SchedulerKind parse_scheduler(std::string_view text);

struct TrainConfig {
  double learning_rate = 5e-6;
  double weight_decay = 5e-4;
  int epochs = 20;
  int batch_size = 16;
  SchedulerKind scheduler = SchedulerKind::cosine_restarts;
  int scheduler_period = 5;
  double min_learning_rate = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;

  TaskKind task = TaskKind::perception;
  PromptScheme scheme = PromptScheme::adjective;
  AlphaMode alpha_mode = AlphaMode::learned;
  ImageInputMode image_input = ImageInputMode::both;
  int patches_n = 5;
  std::vector<std::string> custom_levels;
  bool cross_task = false;

  bool freeze_image_tower = false;
  bool freeze_text_tower = false;
  /// true: keep the epoch with the best validation SRCC; false: keep the last epoch.
  bool select_best = true;

  /// Throws ConfigError on non-positive hyperparameters or an invalid scheme/task pair.
  void validate() const;
  PromptOptions prompt_options() const { return {custom_levels, cross_task}; }
};

/// Learning rate in effect during `epoch` (0-based).
double scheduled_lr(const TrainConfig& cfg, int epoch);

/// Decoupled-weight-decay Adam over a flat parameter vector.
class AdamW {
 public:
  AdamW(Eigen::Index size, double beta1, double beta2, double epsilon, double weight_decay);

  /// Entries whose mask value is 0 are left untouched (including their moments).
  void step(Vector& params, const Vector& grad, double lr, const Vector& mask);
  long steps() const { return t_; }

 private:
  Vector m_, v_;
  double beta1_, beta2_, epsilon_, weight_decay_;
  long t_ = 0;
};

/// A sample with everything the frozen parts of the pipeline can precompute:
/// fixed image descriptors for the resized image and its patches, and tokens.
struct PreparedSample {
  std::string name;
  ImageFeatures image;
  std::vector<ImageFeatures> patches;
  PromptSet prompts;
  std::vector<TokenSequence> sentence_tokens;
  TokenSequence prompt_tokens;
  double target = 0.0;
};

PreparedSample prepare_sample(const CompactDualEncoder& encoder, const ImageInput& img,
                              const std::string& initial_prompt, double target, const TrainConfig& cfg);

/// Loads and prepares every sample carrying the task's MOS. Throws InputError
/// if a sample lacks it or its image cannot be decoded.
std::vector<PreparedSample> prepare_samples(const CompactDualEncoder& encoder,
                                            const std::vector<Sample>& samples, const TrainConfig& cfg);

/// Encoder plus the quality head and its alpha state.
class QualityModel {
 public:
  QualityModel(CompactDualEncoder encoder, HeadSettings head, AlphaMode alpha_mode,
               double alpha_logit = 0.0);

  const CompactDualEncoder& encoder() const { return encoder_; }
  CompactDualEncoder& encoder() { return encoder_; }
  const HeadSettings& head() const { return head_; }
  AlphaMode alpha_mode() const { return alpha_mode_; }
  double alpha_logit() const { return alpha_logit_; }
  void set_alpha_logit(double logit) { alpha_logit_ = logit; }
  AlphaPolicy alpha_policy() const;

  EmbeddingBundle embed(const PreparedSample& sample) const;
  ScoredSample score(const PreparedSample& sample) const;
  std::vector<double> predict(std::span<const PreparedSample> samples) const;

  struct BatchResult {
    double loss = 0.0;  // mean |Q - target|
    std::vector<double> predictions;
    Vector grad_params;          // d loss / d encoder parameters
    double grad_alpha = 0.0;     // d loss / d alpha
    double grad_alpha_logit = 0.0;
  };

  /// Forward and backward pass over a batch. Throws NumericError, naming the
  /// batch members, if the loss is not finite.
  BatchResult loss_and_gradient(std::span<const PreparedSample* const> batch) const;

 private:
  CompactDualEncoder encoder_;
  HeadSettings head_;
  AlphaMode alpha_mode_;
  double alpha_logit_;
};

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double train_mae = 0.0;
  double val_srcc = 0.0;  // NaN when undefined
  double val_plcc = 0.0;
};

struct Checkpoint {
  BackendConfig backend;
  TrainConfig config;
  Vector weights;
  double alpha_logit = 0.0;
  std::string split_manifest;
  int epoch = -1;  // -1: untrained
  double best_val_srcc = 0.0;
  std::vector<EpochLog> history;

  double alpha() const;
  /// Rebuilds the scoring model this checkpoint describes.
  QualityModel model() const;
};

/// Checkpoint directory: config.json, weights.bin, metrics.csv.
void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

/// Checkpoint of an untrained encoder (zero-shot scoring).
Checkpoint initial_checkpoint(const BackendConfig& backend, const TrainConfig& cfg);

/// Fine-tunes encoder and alpha with the batch-mean MAE loss.
class Trainer {
 public:
  Trainer(BackendConfig backend, TrainConfig cfg);

  /// Starts from the seeded initial weights, or from `start` when given.
  Checkpoint train(const std::vector<PreparedSample>& train_set,
                   const std::vector<PreparedSample>& val_set, const Checkpoint* start = nullptr) const;

  const TrainConfig& config() const { return cfg_; }

 private:
  BackendConfig backend_;
  TrainConfig cfg_;
};

/// Scores every test sample. Throws ConfigError if the checkpoint was trained
/// for a different task.
EvalResult evaluate(const Checkpoint& ckpt, const std::vector<PreparedSample>& test_set, TaskKind task,
                    bool logistic_plcc = false);

struct RepetitionReport {
  std::vector<EvalResult> runs;
  std::vector<Checkpoint> checkpoints;
  double mean_srcc = 0.0;
  double mean_plcc = 0.0;
};

struct RepetitionOptions {
  int repetitions = 10;
  double ratio = 0.8;
  std::uint64_t seed = 0;
  bool zero_shot = false;
  bool logistic_plcc = false;
  int jobs = 1;  // repetitions evaluated concurrently
  /// Called with each repetition's split, e.g. to persist its manifest.
  std::function<void(const Split&)> on_split;
};

/// Split, train, evaluate `repetitions` times; reports each run and the means.
RepetitionReport repeat_train_evaluate(const BackendConfig& backend, const TrainConfig& cfg,
                                       const std::vector<Sample>& samples, const RepetitionOptions& options);

}  // namespace tspmgs

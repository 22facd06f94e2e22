#include "tspmgs/training.hpp"

#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <numbers>
#include <unordered_map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "tspmgs/config.hpp"
#include "tspmgs/csv.hpp"
#include "tspmgs/errors.hpp"
#include "tspmgs/random.hpp"

namespace tspmgs {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

HeadSettings head_settings(const BackendConfig& backend, const TrainConfig& cfg) {
  return {1.0 / backend.logit_scale, cfg.image_input, cfg.task};
}

struct ForwardState {
  std::vector<ImageTrace> views;  // [0] resized image, then patches
  std::vector<TextTrace> sentences;
  std::vector<TextTrace> words;
  EmbeddingBundle bundle;
};

ForwardState forward_sample(const CompactDualEncoder& enc, const PreparedSample& s) {
  ForwardState f;
  const Eigen::Index d = enc.joint_dim();
  f.views.reserve(s.patches.size() + 1);
  f.views.push_back(enc.forward_image(s.image));
  for (const auto& p : s.patches) f.views.push_back(enc.forward_image(p));
  f.bundle.image = f.views[0].unit;
  f.bundle.patches.resize(static_cast<Eigen::Index>(s.patches.size()), d);
  for (std::size_t i = 0; i < s.patches.size(); ++i) {
    f.bundle.patches.row(static_cast<Eigen::Index>(i)) = f.views[i + 1].unit.transpose();
  }

  f.bundle.sentences.resize(static_cast<Eigen::Index>(s.sentence_tokens.size()), d);
  for (std::size_t j = 0; j < s.sentence_tokens.size(); ++j) {
    f.sentences.push_back(enc.forward_sentence(s.sentence_tokens[j]));
    f.bundle.sentences.row(static_cast<Eigen::Index>(j)) = f.sentences.back().unit.row(0);
  }

  if (enc.config().word_mode == WordMode::contextual) {
    f.words.push_back(enc.forward_words(s.prompt_tokens));
    f.bundle.words = f.words.back().unit;
  } else {
    const auto positions = s.prompt_tokens.word_positions();
    f.bundle.words.resize(static_cast<Eigen::Index>(positions.size()), d);
    for (std::size_t k = 0; k < positions.size(); ++k) {
      f.words.push_back(enc.forward_sentence(enc.tokenizer().encode(s.prompt_tokens.pieces[positions[k]])));
      f.bundle.words.row(static_cast<Eigen::Index>(k)) = f.words.back().unit.row(0);
    }
  }
  return f;
}

void backward_sample(const CompactDualEncoder& enc, const ForwardState& f, const BundleGradient& g,
                     double scale, Vector& grad) {
  enc.backward_image(f.views[0], scale * g.image, grad);
  for (std::size_t i = 1; i < f.views.size(); ++i) {
    enc.backward_image(f.views[i], scale * g.patches.row(static_cast<Eigen::Index>(i - 1)).transpose(), grad);
  }
  for (std::size_t j = 0; j < f.sentences.size(); ++j) {
    enc.backward_text(f.sentences[j], scale * g.sentences.row(static_cast<Eigen::Index>(j)), grad);
  }
  if (enc.config().word_mode == WordMode::contextual) {
    enc.backward_text(f.words[0], scale * g.words, grad);
  } else {
    for (std::size_t k = 0; k < f.words.size(); ++k) {
      enc.backward_text(f.words[k], scale * g.words.row(static_cast<Eigen::Index>(k)), grad);
    }
  }
}

EpochLog validate_epoch(const QualityModel& model, const std::vector<PreparedSample>& val, EpochLog log) {
  log.val_srcc = kNaN;
  log.val_plcc = kNaN;
  if (val.size() < 2) return log;
  std::vector<double> targets;
  for (const auto& s : val) targets.push_back(s.target);
  try {
    const auto r = make_eval_result(model.predict(val), std::move(targets), model.head().task);
    log.val_srcc = r.srcc;
    log.val_plcc = r.plcc;
  } catch (const CorrelationError&) {
  }
  return log;
}

}  // namespace

std::string_view to_string(SchedulerKind kind) {
  return kind == SchedulerKind::cosine_restarts ? "cosine_restarts" : "cosine_annealing";
}

SchedulerKind parse_scheduler(std::string_view text) {
  if (text == "cosine_restarts") return SchedulerKind::cosine_restarts;
  if (text == "cosine_annealing") return SchedulerKind::cosine_annealing;
  throw ConfigError("unknown scheduler '" + std::string(text) + "' (expected cosine_restarts|cosine_annealing)");
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !(weight_decay >= 0.0) || !(min_learning_rate >= 0.0)) {
    throw ConfigError("learning rates and weight decay must be non-negative");
  }
  if (min_learning_rate > learning_rate) throw ConfigError("min_learning_rate exceeds learning_rate");
  if (epochs < 1 || batch_size < 1 || scheduler_period < 1 || patches_n < 1) {
    throw ConfigError("epochs, batch_size, scheduler_period and patches_n must be positive");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0)) {
    throw ConfigError("invalid AdamW moment settings");
  }
  if (custom_levels.size() == 1) throw ConfigError("custom levels need at least two entries");
  if (!cross_task && !scheme_valid_for(scheme, task)) {
    throw ConfigError("prompt scheme '" + std::string(to_string(scheme)) + "' is not valid for the " +
                      std::string(to_string(task)) + " task");
  }
}

double scheduled_lr(const TrainConfig& cfg, int epoch) {
  const double period = static_cast<double>(cfg.scheduler_period);
  const double phase = cfg.scheduler == SchedulerKind::cosine_restarts
                           ? static_cast<double>(epoch % cfg.scheduler_period)
                           : static_cast<double>(epoch);
  return cfg.min_learning_rate + (cfg.learning_rate - cfg.min_learning_rate) *
                                     (1.0 + std::cos(std::numbers::pi * phase / period)) / 2.0;
}

AdamW::AdamW(Eigen::Index size, double beta1, double beta2, double epsilon, double weight_decay)
    : m_(Vector::Zero(size)),
      v_(Vector::Zero(size)),
      beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon),
      weight_decay_(weight_decay) {}

void AdamW::step(Vector& params, const Vector& grad, double lr, const Vector& mask) {
  if (params.size() != m_.size() || grad.size() != m_.size() || mask.size() != m_.size()) {
    throw InputError("AdamW: size mismatch");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    if (mask[i] == 0.0) continue;
    const double g = grad[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
    params[i] -= lr * weight_decay_ * params[i];
    params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + epsilon_);
  }
}

PreparedSample prepare_sample(const CompactDualEncoder& encoder, const ImageInput& img,
                              const std::string& initial_prompt, double target, const TrainConfig& cfg) {
  PreparedSample s;
  s.name = img.id;
  s.target = target;
  s.image = encoder.image_features(img);
  for (const auto& patch : crop_patches(img, cfg.patches_n, encoder.config().input_size)) {
    s.patches.push_back(encoder.image_features(patch));
  }
  s.prompts = build_prompts(cfg.task, cfg.scheme, initial_prompt, cfg.prompt_options());
  for (const auto& sentence : s.prompts.sentences) s.sentence_tokens.push_back(encoder.tokenizer().encode(sentence));
  s.prompt_tokens = encoder.tokenizer().encode(initial_prompt);
  if (s.prompt_tokens.word_positions().empty()) {
    throw InputError("initial prompt of '" + img.id + "' contains no words");
  }
  return s;
}

std::vector<PreparedSample> prepare_samples(const CompactDualEncoder& encoder,
                                            const std::vector<Sample>& samples, const TrainConfig& cfg) {
  std::vector<PreparedSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    const auto target = s.mos(cfg.task);
    if (!target) {
      throw InputError("sample '" + s.name + "' has no " + std::string(to_string(cfg.task)) + " MOS");
    }
    auto img = load_image(s.image_path);
    img.id = s.name;
    out.push_back(prepare_sample(encoder, img, s.initial_prompt, *target, cfg));
  }
  return out;
}

QualityModel::QualityModel(CompactDualEncoder encoder, HeadSettings head, AlphaMode alpha_mode,
                           double alpha_logit)
    : encoder_(std::move(encoder)), head_(head), alpha_mode_(alpha_mode), alpha_logit_(alpha_logit) {}

AlphaPolicy QualityModel::alpha_policy() const {
  if (alpha_mode_ != AlphaMode::learned) return AlphaPolicy::initial(alpha_mode_);
  return {AlphaMode::learned, alpha_from_logit(alpha_logit_)};
}

EmbeddingBundle QualityModel::embed(const PreparedSample& sample) const {
  return forward_sample(encoder_, sample).bundle;
}

ScoredSample QualityModel::score(const PreparedSample& sample) const {
  return score_bundle(embed(sample), head_, alpha_policy());
}

std::vector<double> QualityModel::predict(std::span<const PreparedSample> samples) const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(score(s).score.q_final);
  return out;
}

QualityModel::BatchResult QualityModel::loss_and_gradient(std::span<const PreparedSample* const> batch) const {
  if (batch.empty()) throw InputError("empty batch");
  BatchResult r;
  r.grad_params = Vector::Zero(encoder_.parameters().size());
  const AlphaPolicy policy = alpha_policy();
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  std::vector<ForwardState> states;
  states.reserve(batch.size());
  std::vector<double> targets;
  for (const auto* s : batch) {
    states.push_back(forward_sample(encoder_, *s));
    r.predictions.push_back(score_bundle(states.back().bundle, head_, policy).score.q_final);
    targets.push_back(s->target);
  }
  bool finite = true;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    finite = finite && std::isfinite(r.predictions[i]) && std::isfinite(targets[i]);
  }
  if (!finite) {
    std::string dump;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      dump += fmt::format("\n  {} prediction={} target={}", batch[i]->name, r.predictions[i], targets[i]);
    }
    spdlog::error("non-finite loss; offending batch:{}", dump);
    throw NumericError("non-finite loss in batch:" + dump);
  }
  r.loss = batch_mae(r.predictions, targets);

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double dq = mae_grad(r.predictions[i], targets[i]) * inv_batch;
    if (dq == 0.0) continue;
    const auto g = score_gradient(states[i].bundle, head_, policy.value);
    backward_sample(encoder_, states[i], g, dq, r.grad_params);
    r.grad_alpha += dq * g.alpha;
  }
  if (alpha_mode_ == AlphaMode::learned) {
    r.grad_alpha_logit = r.grad_alpha * alpha_logit_derivative(alpha_logit_);
  } else {
    r.grad_alpha = 0.0;
  }
  return r;
}

double Checkpoint::alpha() const {
  return config.alpha_mode == AlphaMode::learned ? alpha_from_logit(alpha_logit)
                                                 : AlphaPolicy::initial(config.alpha_mode).value;
}

QualityModel Checkpoint::model() const {
  BackendConfig b = backend;
  b.weights.clear();
  CompactDualEncoder enc(b);
  if (weights.size() != enc.parameters().size()) {
    throw BackendError("checkpoint weights do not match the backend configuration");
  }
  enc.mutable_parameters() = weights;
  return QualityModel(std::move(enc), head_settings(backend, config), config.alpha_mode, alpha_logit);
}

Checkpoint initial_checkpoint(const BackendConfig& backend, const TrainConfig& cfg) {
  cfg.validate();
  Checkpoint c;
  c.backend = backend;
  c.config = cfg;
  auto model = make_backend(backend);
  c.weights = dynamic_cast<const CompactDualEncoder&>(*model).parameters();
  c.backend.weights.clear();
  return c;
}

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt) {
  std::filesystem::create_directories(dir);
  nlohmann::json j = {{"backend", to_json(ckpt.backend)},
                      {"train", to_json(ckpt.config)},
                      {"alpha", {{"mode", std::string(to_string(ckpt.config.alpha_mode))},
                                 {"logit", ckpt.alpha_logit},
                                 {"value", ckpt.alpha()}}},
                      {"epoch", ckpt.epoch},
                      {"best_val_srcc", ckpt.best_val_srcc},
                      {"split_manifest", ckpt.split_manifest},
                      {"weights", "weights.bin"}};
  std::ofstream(dir / "config.json") << j.dump(2) << '\n';

  BackendConfig b = ckpt.backend;
  b.weights.clear();
  CompactDualEncoder enc(b);
  enc.mutable_parameters() = ckpt.weights;
  enc.save_weights(dir / "weights.bin");

  std::ofstream log(dir / "metrics.csv");
  write_csv_row(log, {"epoch", "lr", "train_mae", "val_srcc", "val_plcc"});
  for (const auto& e : ckpt.history) {
    write_csv_row(log, {std::to_string(e.epoch), fmt::format("{}", e.lr), fmt::format("{}", e.train_mae),
                        fmt::format("{}", e.val_srcc), fmt::format("{}", e.val_plcc)});
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "config.json");
  if (!in) throw InputError("no checkpoint config in " + dir.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("corrupt checkpoint config: " + std::string(e.what()));
  }
  Checkpoint c;
  c.backend = backend_from_json(j.at("backend"));
  c.config = train_from_json(j.at("train"));
  c.alpha_logit = j.at("alpha").at("logit").get<double>();
  c.epoch = j.value("epoch", -1);
  c.best_val_srcc = j.value("best_val_srcc", 0.0);
  c.split_manifest = j.value("split_manifest", "");

  BackendConfig b = c.backend;
  b.weights.clear();
  CompactDualEncoder enc(b);
  enc.load_weights(dir / j.value("weights", "weights.bin"));
  c.weights = enc.parameters();

  if (std::ifstream log{dir / "metrics.csv"}) {
    const auto rows = read_csv(log);
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows[r].size() != 5) continue;
      c.history.push_back({std::stoi(rows[r][0]), std::stod(rows[r][1]), std::stod(rows[r][2]),
                           std::stod(rows[r][3]), std::stod(rows[r][4])});
    }
  }
  return c;
}

Trainer::Trainer(BackendConfig backend, TrainConfig cfg) : backend_(std::move(backend)), cfg_(std::move(cfg)) {
  backend_.validate();
  cfg_.validate();
}

Checkpoint Trainer::train(const std::vector<PreparedSample>& train_set,
                          const std::vector<PreparedSample>& val_set, const Checkpoint* start) const {
  if (train_set.empty()) throw InputError("training partition is empty");
  const Checkpoint origin = start ? *start : initial_checkpoint(backend_, cfg_);
  QualityModel model = origin.model();

  const Vector param_mask =
      model.encoder().update_mask({!cfg_.freeze_image_tower, !cfg_.freeze_text_tower});
  const Vector alpha_mask = Vector::Constant(1, cfg_.alpha_mode == AlphaMode::learned ? 1.0 : 0.0);
  AdamW param_opt(param_mask.size(), cfg_.beta1, cfg_.beta2, cfg_.epsilon, cfg_.weight_decay);
  AdamW alpha_opt(1, cfg_.beta1, cfg_.beta2, cfg_.epsilon, cfg_.weight_decay);

  Checkpoint best = origin;
  best.backend.weights.clear();
  best.config = cfg_;
  best.best_val_srcc = -std::numeric_limits<double>::infinity();
  bool have_best = false;
  std::vector<EpochLog> history;

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto batch = static_cast<std::size_t>(cfg_.batch_size);

  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    const double lr = scheduled_lr(cfg_, epoch);
    Rng rng{cfg_.seed, 0x747261696eULL, static_cast<std::uint64_t>(epoch)};
    rng.shuffle(order);

    double loss_sum = 0.0;
    for (std::size_t start_i = 0; start_i < order.size(); start_i += batch) {
      std::vector<const PreparedSample*> members;
      for (std::size_t i = start_i; i < std::min(order.size(), start_i + batch); ++i) {
        members.push_back(&train_set[order[i]]);
      }
      const auto r = model.loss_and_gradient(members);
      loss_sum += r.loss * static_cast<double>(members.size());
      param_opt.step(model.encoder().mutable_parameters(), r.grad_params, lr, param_mask);
      Vector logit = Vector::Constant(1, model.alpha_logit());
      alpha_opt.step(logit, Vector::Constant(1, r.grad_alpha_logit), lr, alpha_mask);
      model.set_alpha_logit(logit[0]);
    }

    EpochLog log{epoch, lr, loss_sum / static_cast<double>(train_set.size()), kNaN, kNaN};
    log = validate_epoch(model, val_set, log);
    history.push_back(log);
    spdlog::debug("epoch {} lr={} train_mae={} val_srcc={}", epoch, lr, log.train_mae, log.val_srcc);

    const bool last = epoch + 1 == cfg_.epochs;
    const bool improved = std::isfinite(log.val_srcc) && log.val_srcc > best.best_val_srcc;
    if (cfg_.select_best ? (improved || (last && !have_best)) : last) {
      best.weights = model.encoder().parameters();
      best.alpha_logit = model.alpha_logit();
      best.epoch = epoch;
      if (std::isfinite(log.val_srcc)) {
        best.best_val_srcc = log.val_srcc;
        have_best = true;
      }
    }
  }
  if (!std::isfinite(best.best_val_srcc)) best.best_val_srcc = kNaN;
  best.history = std::move(history);
  return best;
}

EvalResult evaluate(const Checkpoint& ckpt, const std::vector<PreparedSample>& test_set, TaskKind task,
                    bool logistic_plcc) {
  if (ckpt.config.task != task) {
    throw ConfigError("checkpoint was trained for " + std::string(to_string(ckpt.config.task)) +
                      ", not " + std::string(to_string(task)));
  }
  const QualityModel model = ckpt.model();
  std::vector<double> targets;
  targets.reserve(test_set.size());
  for (const auto& s : test_set) targets.push_back(s.target);
  return make_eval_result(model.predict(test_set), std::move(targets), task, logistic_plcc);
}

RepetitionReport repeat_train_evaluate(const BackendConfig& backend, const TrainConfig& cfg,
                                       const std::vector<Sample>& samples, const RepetitionOptions& options) {
  if (options.repetitions < 1) throw ConfigError("at least one repetition is required");
  const CompactDualEncoder frontend([&] {
    BackendConfig b = backend;
    b.weights.clear();
    return b;
  }());
  const auto prepared = prepare_samples(frontend, samples, cfg);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < prepared.size(); ++i) {
    if (!index.emplace(samples[i].name, i).second) throw InputError("duplicate image name '" + samples[i].name + "'");
  }

  std::vector<std::pair<std::vector<PreparedSample>, std::vector<PreparedSample>>> partitions;
  for (int rep = 0; rep < options.repetitions; ++rep) {
    const Split s = split(samples, {options.ratio, options.seed, rep});
    if (options.on_split) options.on_split(s);
    auto gather = [&](const std::vector<Sample>& part) {
      std::vector<PreparedSample> out;
      for (const auto& x : part) out.push_back(prepared[index.at(x.name)]);
      return out;
    };
    partitions.emplace_back(gather(s.train), gather(s.test));
  }

  const Checkpoint start = initial_checkpoint(backend, cfg);
  auto run = [&](int rep) -> std::pair<EvalResult, Checkpoint> {
    const auto& [train_part, test_part] = partitions[static_cast<std::size_t>(rep)];
    TrainConfig rep_cfg = cfg;
    rep_cfg.seed = cfg.seed + static_cast<std::uint64_t>(rep);
    Checkpoint ckpt = options.zero_shot ? start : Trainer(backend, rep_cfg).train(train_part, test_part, &start);
    EvalResult result = evaluate(ckpt, test_part, cfg.task, options.logistic_plcc);
    return {std::move(result), std::move(ckpt)};
  };

  RepetitionReport report;
  report.runs.resize(static_cast<std::size_t>(options.repetitions));
  report.checkpoints.resize(static_cast<std::size_t>(options.repetitions));
  const int jobs = std::max(1, options.jobs);
  for (int first = 0; first < options.repetitions; first += jobs) {
    std::vector<std::future<std::pair<EvalResult, Checkpoint>>> pending;
    for (int rep = first; rep < std::min(options.repetitions, first + jobs); ++rep) {
      pending.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred, run, rep));
    }
    for (std::size_t k = 0; k < pending.size(); ++k) {
      auto [result, ckpt] = pending[k].get();
      report.runs[static_cast<std::size_t>(first) + k] = std::move(result);
      report.checkpoints[static_cast<std::size_t>(first) + k] = std::move(ckpt);
    }
  }
  for (const auto& r : report.runs) {
    report.mean_srcc += r.srcc;
    report.mean_plcc += r.plcc;
  }
  report.mean_srcc /= static_cast<double>(report.runs.size());
  report.mean_plcc /= static_cast<double>(report.runs.size());
  return report;
}

}  // namespace tspmgs

#include "tspmgs/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "tspmgs/config.hpp"
#include "tspmgs/csv.hpp"
#include "tspmgs/errors.hpp"
#include "tspmgs/plot.hpp"
#include "tspmgs/synthetic.hpp"
#include "tspmgs/training.hpp"

namespace tspmgs {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Overrides {
  std::string config;
  std::optional<std::string> task;
  std::optional<std::string> scheme;
  std::optional<std::string> alpha_mode;
  std::optional<std::string> image_input;
  std::optional<int> patches_n;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<int> repetitions;
  std::optional<int> jobs;
  std::optional<bool> deterministic;
  bool zero_shot = false;
  std::string out;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "Run config (JSON)");
  cmd->add_option("--task", o.task, "perception | alignment");
  cmd->add_option("--scheme", o.scheme, "antonym | adjective | adverb");
  cmd->add_option("--alpha-mode", o.alpha_mode, "fixed_0 | fixed_1 | learned");
  cmd->add_option("--image-input", o.image_input, "both | only_image | only_patches");
  cmd->add_option("--patches-n", o.patches_n, "Number of patches per image");
  cmd->add_option("--seed", o.seed, "Split / shuffle seed");
  cmd->add_flag("--deterministic,!--no-deterministic", o.deterministic,
                "Reproducible seeding (default on); off draws a fresh seed and records it");
  cmd->add_flag("--zero-shot", o.zero_shot, "Score with the untrained encoder (no fine-tuning)");
  cmd->add_option("--out", o.out, "Output directory (overrides output_dir)");
}

PromptScheme default_scheme(TaskKind task) {
  return task == TaskKind::alignment ? PromptScheme::adverb : PromptScheme::adjective;
}

// The configured scheme when it suits the task, otherwise the task's default.
TrainConfig for_task(TrainConfig cfg, TaskKind task) {
  cfg.task = task;
  if (!cfg.cross_task && !scheme_valid_for(cfg.scheme, task)) cfg.scheme = default_scheme(task);
  return cfg;
}

RunConfig resolve(const Overrides& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (o.task) {
    cfg.train.task = parse_task(*o.task);
    if (!o.scheme && !scheme_valid_for(cfg.train.scheme, cfg.train.task) && !cfg.train.cross_task) {
      cfg.train.scheme = default_scheme(cfg.train.task);
    }
  }
  if (o.scheme) cfg.train.scheme = parse_scheme(*o.scheme);
  if (o.alpha_mode) cfg.train.alpha_mode = parse_alpha_mode(*o.alpha_mode);
  if (o.image_input) cfg.train.image_input = parse_image_input(*o.image_input);
  if (o.patches_n) cfg.train.patches_n = *o.patches_n;
  if (o.seed) cfg.seed = *o.seed;
  if (o.epochs) cfg.train.epochs = *o.epochs;
  if (o.repetitions) cfg.repetitions = *o.repetitions;
  if (o.jobs) cfg.jobs = *o.jobs;
  if (o.deterministic) cfg.deterministic = *o.deterministic;
  if (o.zero_shot) cfg.zero_shot = true;
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (!cfg.deterministic) {
    cfg.seed = std::random_device{}();
    spdlog::info("non-deterministic run, drew seed {}", cfg.seed);
  }
  cfg.train.seed = cfg.seed;
  return cfg;
}

int levels_for(const TrainConfig& cfg) {
  return cfg.custom_levels.empty() ? levels_of(cfg.scheme) : static_cast<int>(cfg.custom_levels.size());
}

std::vector<TaskKind> tasks_of(const DatasetEntry& d, const RunConfig& cfg, bool task_forced) {
  if (task_forced || d.tasks.empty()) return {cfg.train.task};
  return d.tasks;
}

std::vector<Sample> task_samples(const std::vector<Sample>& all, const TrainConfig& cfg) {
  std::vector<Sample> out;
  for (const auto& s : all) {
    if (s.mos(cfg.task)) out.push_back(s);
  }
  if (out.size() < 2) {
    throw InputError("fewer than two samples carry a " + std::string(to_string(cfg.task)) + " MOS");
  }
  return normalize_mos(std::move(out), static_cast<double>(levels_for(cfg)));
}

std::string num(double v) { return fmt::format("{}", v); }

json similarity_json(const ScoredSample& s) {
  return {{"p_image", s.similarity.p_image},   {"p_patch", s.similarity.p_patch},
          {"w_image", s.similarity.w_image},   {"w_patch", s.similarity.w_patch},
          {"temperature", s.similarity.temperature}, {"q_cg_image", s.score.q_cg_image},
          {"q_cg_patch", s.score.q_cg_patch},  {"q_fg", s.score.q_fg},
          {"q_final", s.score.q_final},        {"alpha", s.score.alpha}};
}

double stddev(const std::vector<double>& v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0;
}

// ---- score ---------------------------------------------------------------

int cmd_score(const Overrides& o, const std::string& image_path, const std::string& prompt,
              const std::string& checkpoint_dir, const std::string& json_out) {
  const RunConfig cfg = resolve(o);
  ImageInput img = load_image(image_path);

  Checkpoint ckpt;
  if (!checkpoint_dir.empty()) {
    ckpt = load_checkpoint(checkpoint_dir);
    if (o.task && ckpt.config.task != cfg.train.task) {
      throw ConfigError("checkpoint was trained for the " + std::string(to_string(ckpt.config.task)) + " task");
    }
    if (o.alpha_mode) ckpt.config.alpha_mode = cfg.train.alpha_mode;
    if (o.patches_n) ckpt.config.patches_n = cfg.train.patches_n;
    if (o.image_input) ckpt.config.image_input = cfg.train.image_input;
  } else if (cfg.zero_shot) {
    cfg.validate(false);
    ckpt = initial_checkpoint(cfg.backend, cfg.train);
  } else {
    throw ConfigError("score needs --checkpoint DIR or --zero-shot");
  }

  const QualityModel model = ckpt.model();
  const auto prepared = prepare_sample(model.encoder(), img, prompt, 0.0, ckpt.config);
  const ScoredSample scored = model.score(prepared);

  json j = similarity_json(scored);
  j["image"] = image_path;
  j["prompt"] = prompt;
  j["task"] = to_string(ckpt.config.task);
  j["scheme"] = to_string(ckpt.config.scheme);
  j["sentences"] = prepared.prompts.sentences;
  j["alpha_mode"] = to_string(ckpt.config.alpha_mode);
  j["image_input"] = to_string(ckpt.config.image_input);
  j["patches_n"] = ckpt.config.patches_n;
  j["zero_shot"] = checkpoint_dir.empty();
  j["config_hash"] = config_hash(cfg);

  std::cout << fmt::format("{} [{} / {}{}]\n", image_path, to_string(ckpt.config.task),
                           to_string(ckpt.config.scheme), checkpoint_dir.empty() ? ", zero-shot" : "");
  for (std::size_t l = 0; l < prepared.prompts.sentences.size(); ++l) {
    std::cout << fmt::format("  p_image={:.4f} p_patch={:.4f}  {}\n", scored.similarity.p_image[l],
                             scored.similarity.p_patch[l], prepared.prompts.sentences[l]);
  }
  std::cout << fmt::format("  w_image={:.4f} w_patch={:.4f}\n", scored.similarity.w_image, scored.similarity.w_patch);
  std::cout << fmt::format("  Q_cg^I={:.4f} Q_cg^P={:.4f} Q_fg={:.4f} alpha={:.4f}\n", scored.score.q_cg_image,
                           scored.score.q_cg_patch, scored.score.q_fg, scored.score.alpha);
  std::cout << fmt::format("  Q={:.4f}\n", scored.score.q_final);
  std::cout << j.dump(2) << '\n';
  if (!json_out.empty()) {
    std::ofstream out(json_out);
    if (!out) throw InputError("cannot write " + json_out);
    out << j.dump(2) << '\n';
  }
  return kExitOk;
}

// ---- train ---------------------------------------------------------------

const DatasetEntry& pick_dataset(const RunConfig& cfg, const std::string& name) {
  if (cfg.datasets.empty()) throw ConfigError("config lists no datasets");
  if (name.empty()) return cfg.datasets.front();
  for (const auto& d : cfg.datasets) {
    if (d.name == name) return d;
  }
  throw ConfigError("no dataset named '" + name + "' in config");
}

int cmd_train(const Overrides& o, const std::string& dataset_name, int repetition) {
  RunConfig cfg = resolve(o);
  cfg.validate(true);
  const auto& entry = pick_dataset(cfg, dataset_name);
  const auto loaded = load_dataset(entry.manifest, entry.image_dir);
  const auto samples = task_samples(loaded.samples, cfg.train);
  const Split parts = split(samples, {cfg.split_ratio, cfg.seed, repetition});

  const fs::path out = cfg.output_dir / "train" / entry.name / std::string(to_string(cfg.train.task));
  fs::create_directories(out);
  const fs::path manifest = out / fmt::format("split_{:02d}.csv", repetition);
  write_split_manifest(manifest, parts);

  const CompactDualEncoder frontend(cfg.backend);
  const auto train_set = prepare_samples(frontend, parts.train, cfg.train);
  const auto test_set = prepare_samples(frontend, parts.test, cfg.train);
  Checkpoint ckpt = cfg.zero_shot ? initial_checkpoint(cfg.backend, cfg.train)
                                  : Trainer(cfg.backend, cfg.train).train(train_set, test_set);
  ckpt.split_manifest = manifest.string();
  save_checkpoint(out / "checkpoint", ckpt);
  const auto result = evaluate(ckpt, test_set, cfg.train.task, cfg.logistic_plcc);
  std::cout << fmt::format("{} {} repetition {}: epoch {} SRCC {:.4f} PLCC {:.4f} alpha {:.4f}\n", entry.name,
                           to_string(cfg.train.task), repetition, ckpt.epoch, result.srcc, result.plcc, ckpt.alpha());
  std::cout << "checkpoint: " << (out / "checkpoint").string() << '\n';
  return kExitOk;
}

// ---- benchmark -----------------------------------------------------------

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

RepetitionReport run_task(const RunConfig& cfg, const TrainConfig& tcfg, const std::vector<Sample>& samples,
                          const fs::path& dir) {
  fs::create_directories(dir / "splits");
  RepetitionOptions options;
  options.repetitions = cfg.repetitions;
  options.ratio = cfg.split_ratio;
  options.seed = cfg.seed;
  options.zero_shot = cfg.zero_shot;
  options.logistic_plcc = cfg.logistic_plcc;
  options.jobs = cfg.jobs;
  options.on_split = [&](const Split& s) {
    write_split_manifest(dir / "splits" / fmt::format("split_{:02d}.csv", s.repetition_index), s);
  };
  return repeat_train_evaluate(cfg.backend, tcfg, samples, options);
}

int cmd_benchmark(const Overrides& o) {
  RunConfig cfg = resolve(o);
  cfg.validate(true);
  if (cfg.datasets.empty()) throw ConfigError("config lists no datasets");
  const std::string hash = config_hash(cfg);
  const fs::path root = cfg.output_dir / "benchmark";
  fs::create_directories(root);
  write_json(root / "run_config.json", {{"config", to_json(cfg)}, {"config_hash", hash}});

  std::vector<CsvRow> summary;
  for (const auto& entry : cfg.datasets) {
    const auto loaded = load_dataset(entry.manifest, entry.image_dir);
    for (TaskKind task : tasks_of(entry, cfg, o.task.has_value())) {
      const TrainConfig tcfg = for_task(cfg.train, task);
      const auto samples = task_samples(loaded.samples, tcfg);
      const fs::path dir = root / entry.name / std::string(to_string(task));
      const auto report = run_task(cfg, tcfg, samples, dir);

      std::ofstream reps(dir / "repetitions.csv");
      write_csv_row(reps, {"repetition", "srcc", "plcc", "config_hash"});
      std::vector<double> srccs, plccs;
      for (std::size_t r = 0; r < report.runs.size(); ++r) {
        const auto& run = report.runs[r];
        write_csv_row(reps, {std::to_string(r), num(run.srcc), num(run.plcc), hash});
        srccs.push_back(run.srcc);
        plccs.push_back(run.plcc);
        write_json(dir / fmt::format("predictions_rep{:02d}.json", r),
                   {{"repetition", r}, {"srcc", run.srcc}, {"plcc", run.plcc}, {"predictions", run.predictions},
                    {"targets", run.targets}, {"config_hash", hash}});
      }
      write_scatter_png(dir / "scatter.png", report.runs.front().targets, report.runs.front().predictions,
                        fmt::format("{} {} (repetition 0) SRCC {:.3f}", entry.name, to_string(task),
                                    report.runs.front().srcc));
      summary.push_back({entry.name, std::string(to_string(task)), std::string(to_string(tcfg.scheme)),
                         std::string(to_string(tcfg.alpha_mode)), std::to_string(report.runs.size()),
                         num(report.mean_srcc), num(report.mean_plcc), num(stddev(srccs, report.mean_srcc)),
                         num(stddev(plccs, report.mean_plcc)), std::to_string(cfg.seed), hash});
    }
  }

  std::ofstream out(root / "summary.csv");
  write_csv_row(out, {"dataset", "task", "scheme", "alpha_mode", "repetitions", "srcc_mean", "plcc_mean", "srcc_std",
                      "plcc_std", "seed", "config_hash"});
  std::cout << fmt::format("{:<16} {:<11} {:<10} {:>9} {:>9}\n", "dataset", "task", "scheme", "SRCC", "PLCC");
  for (const auto& row : summary) {
    write_csv_row(out, row);
    std::cout << fmt::format("{:<16} {:<11} {:<10} {:>9.4f} {:>9.4f}\n", row[0], row[1], row[2], std::stod(row[5]),
                             std::stod(row[6]));
  }
  std::cout << "summary: " << (root / "summary.csv").string() << '\n';
  return kExitOk;
}

// ---- ablate --------------------------------------------------------------

struct Setting {
  std::string label;
  std::function<std::optional<TrainConfig>(TrainConfig)> apply;  // nullopt: not applicable to the task
};

std::vector<Setting> settings_for(const std::string& axis, bool cross_task) {
  std::vector<Setting> out;
  if (axis == "alpha") {
    for (auto [label, mode] : {std::pair{"alpha_0", AlphaMode::fixed_0}, std::pair{"alpha_1", AlphaMode::fixed_1},
                               std::pair{"alpha_learned", AlphaMode::learned}}) {
      out.push_back({label, [mode](TrainConfig c) -> std::optional<TrainConfig> {
                       c.alpha_mode = mode;
                       c.image_input = ImageInputMode::both;
                       return c;
                     }});
    }
  } else if (axis == "image_input") {
    for (auto mode : {ImageInputMode::only_image, ImageInputMode::only_patches, ImageInputMode::both}) {
      out.push_back({std::string(to_string(mode)), [mode](TrainConfig c) -> std::optional<TrainConfig> {
                       c.image_input = mode;
                       return c;
                     }});
    }
  } else if (axis == "prompt_scheme") {
    for (auto scheme : {PromptScheme::antonym, PromptScheme::adjective, PromptScheme::adverb}) {
      out.push_back({std::string(to_string(scheme)), [scheme, cross_task](TrainConfig c) -> std::optional<TrainConfig> {
                       if (!cross_task && !scheme_valid_for(scheme, c.task)) return std::nullopt;
                       c.scheme = scheme;
                       c.cross_task = cross_task;
                       return c;
                     }});
    }
  } else {
    throw ConfigError("unknown ablation axis '" + axis + "' (expected prompt_scheme|image_input|alpha)");
  }
  return out;
}

int cmd_ablate(const Overrides& o, const std::string& axis, bool cross_task) {
  RunConfig cfg = resolve(o);
  cfg.validate(true);
  if (cfg.datasets.empty()) throw ConfigError("config lists no datasets");
  const auto settings = settings_for(axis, cross_task);
  const std::string hash = config_hash(cfg);
  const fs::path root = cfg.output_dir / "ablation";
  fs::create_directories(root);

  struct Column {
    std::string label;
    std::vector<Sample> samples;
    TaskKind task;
    std::string dataset;
  };
  std::vector<Column> columns;
  for (const auto& entry : cfg.datasets) {
    const auto loaded = load_dataset(entry.manifest, entry.image_dir);
    for (TaskKind task : tasks_of(entry, cfg, o.task.has_value())) {
      columns.push_back({entry.name + ":" + std::string(to_string(task)),
                         task_samples(loaded.samples, for_task(cfg.train, task)), task, entry.name});
    }
  }

  CsvRow header{"axis", "setting"};
  for (const auto& c : columns) {
    header.push_back(c.label + " srcc");
    header.push_back(c.label + " plcc");
  }
  header.push_back("config_hash");
  std::vector<CsvRow> rows;
  for (const auto& setting : settings) {
    CsvRow row{axis, setting.label};
    bool any = false;
    for (const auto& c : columns) {
      TrainConfig base = for_task(cfg.train, c.task);
      if (axis == "prompt_scheme") base.cross_task = cross_task;
      const auto tcfg = setting.apply(base);
      if (!tcfg) {
        row.insert(row.end(), {"-", "-"});
        continue;
      }
      any = true;
      const auto report = run_task(cfg, *tcfg, c.samples,
                                   root / axis / setting.label / c.dataset / std::string(to_string(c.task)));
      row.push_back(num(report.mean_srcc));
      row.push_back(num(report.mean_plcc));
    }
    row.push_back(hash);
    if (any) rows.push_back(std::move(row));
  }

  const fs::path table = root / (axis + ".csv");
  std::ofstream out(table);
  write_csv_row(out, header);
  for (const auto& r : rows) write_csv_row(out, r);

  std::cout << fmt::format("{:<16}", "setting");
  for (const auto& c : columns) std::cout << fmt::format(" {:>24}", c.label + " SRCC/PLCC");
  std::cout << '\n';
  for (const auto& r : rows) {
    std::cout << fmt::format("{:<16}", r[1]);
    for (std::size_t k = 0; k < columns.size(); ++k) {
      const auto& s = r[2 + 2 * k];
      const auto& p = r[3 + 2 * k];
      std::cout << (s == "-" ? fmt::format(" {:>24}", "-")
                             : fmt::format(" {:>15.4f}/{:<8.4f}", std::stod(s), std::stod(p)));
    }
    std::cout << '\n';
  }
  std::cout << "table: " << table.string() << '\n';
  return kExitOk;
}

// ---- split / synth -------------------------------------------------------

int cmd_split(const Overrides& o, const std::string& dataset_name) {
  RunConfig cfg = resolve(o);
  cfg.validate(true);
  const auto& entry = pick_dataset(cfg, dataset_name);
  const auto loaded = load_dataset(entry.manifest, entry.image_dir);
  const fs::path dir = cfg.output_dir / "splits" / entry.name;
  fs::create_directories(dir);
  for (int rep = 0; rep < cfg.repetitions; ++rep) {
    const Split s = split(loaded.samples, {cfg.split_ratio, cfg.seed, rep});
    const auto path = dir / fmt::format("split_{:02d}.csv", rep);
    write_split_manifest(path, s);
    std::cout << fmt::format("{}: train {} test {} shared prompts {}\n", path.string(), s.train.size(),
                             s.test.size(), prompt_leakage(s));
  }
  return kExitOk;
}

int cmd_synth(const Overrides& o, const SyntheticOptions& options) {
  RunConfig cfg = resolve(o);
  const fs::path dir = o.out.empty() ? fs::path("synthetic") : fs::path(o.out);
  const auto manifest = write_synthetic_dataset(dir, options, cfg.backend);

  RunConfig toy = cfg;
  toy.datasets = {{"synthetic", "manifest.csv", "images", {TaskKind::perception, TaskKind::alignment}}};
  toy.output_dir = "runs";
  json j = to_json(toy);
  write_json(dir / "config.json", j);
  std::cout << fmt::format("wrote {} images, manifest {}, config {}\n", options.count, manifest.string(),
                           (dir / "config.json").string());
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Prompt-driven quality scoring for AI-generated images",
               "tspmgs"};
  app.require_subcommand(1);

  Overrides o;
  std::string image, prompt, checkpoint, json_out, dataset, axis;
  int repetition = 0;
  bool cross_task = false;
  SyntheticOptions synth;

  auto* score = app.add_subcommand("score", "Score one image against its prompt");
  add_common(score, o);
  score->add_option("--image", image, "Image file")->required();
  score->add_option("--prompt", prompt, "Initial (generation) prompt")->required();
  score->add_option("--checkpoint", checkpoint, "Checkpoint directory");
  score->add_option("--json-out", json_out, "Also write the JSON result here");

  auto* train = app.add_subcommand("train", "Fine-tune on one split of one dataset");
  add_common(train, o);
  train->add_option("--dataset", dataset, "Dataset name from the config (default: first)");
  train->add_option("--repetition", repetition, "Split repetition index");
  train->add_option("--epochs", o.epochs, "Override epochs");

  auto* bench = app.add_subcommand("benchmark", "Repeated split/train/evaluate over every dataset and task");
  add_common(bench, o);
  bench->add_option("--repetitions", o.repetitions, "Override the number of repetitions");
  bench->add_option("--epochs", o.epochs, "Override epochs");
  bench->add_option("--jobs", o.jobs, "Repetitions run concurrently");

  auto* ablate = app.add_subcommand("ablate", "Compare settings along one axis");
  add_common(ablate, o);
  ablate->add_option("--axis", axis, "prompt_scheme | image_input | alpha")->required();
  ablate->add_flag("--cross-task", cross_task, "Run every prompt scheme on every task");
  ablate->add_option("--repetitions", o.repetitions, "Override the number of repetitions");
  ablate->add_option("--epochs", o.epochs, "Override epochs");
  ablate->add_option("--jobs", o.jobs, "Repetitions run concurrently");

  auto* split_cmd = app.add_subcommand("split", "Write split manifests for every repetition");
  add_common(split_cmd, o);
  split_cmd->add_option("--dataset", dataset, "Dataset name from the config (default: first)");
  split_cmd->add_option("--repetitions", o.repetitions, "Override the number of repetitions");

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus with recoverable ranking");
  add_common(synth_cmd, o);
  synth_cmd->add_option("--count", synth.count, "Number of images");
  synth_cmd->add_option("--size", synth.size, "Image side in pixels");
  synth_cmd->add_option("--synth-seed", synth.seed, "Generator seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*score) return cmd_score(o, image, prompt, checkpoint, json_out);
    if (*train) return cmd_train(o, dataset, repetition);
    if (*bench) return cmd_benchmark(o);
    if (*ablate) return cmd_ablate(o, axis, cross_task);
    if (*split_cmd) return cmd_split(o, dataset);
    if (*synth_cmd) return cmd_synth(o, synth);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const BackendError& e) {
    std::cerr << "backend error: " << e.what() << '\n';
    return kExitBackend;
  } catch (const CorrelationError& e) {
    std::cerr << "correlation error: " << e.what() << '\n';
    return kExitCorrelation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace tspmgs

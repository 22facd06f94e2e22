#include "tspmgs/config.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>

#include "tspmgs/errors.hpp"

namespace tspmgs {
namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const char* where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(std::string("unknown key '") + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

std::string read_string(const json& j, const char* key, std::string fallback) {
  read(j, key, fallback);
  return fallback;
}

}  // namespace

json to_json(const BackendConfig& c) {
  return {{"model_name", c.model_name},     {"input_size", c.input_size},
          {"joint_dim", c.joint_dim},       {"device", c.device},
          {"weights", c.weights},           {"image_hidden", c.image_hidden},
          {"text_width", c.text_width},     {"vocab_size", c.vocab_size},
          {"context_length", c.context_length}, {"logit_scale", c.logit_scale},
          {"word_mode", std::string(to_string(c.word_mode))}, {"init_seed", c.init_seed},
          {"allow_network", c.allow_network}};
}

BackendConfig backend_from_json(const json& j) {
  reject_unknown(j,
                 {"model_name", "input_size", "joint_dim", "device", "weights", "image_hidden",
                  "text_width", "vocab_size", "context_length", "logit_scale", "word_mode",
                  "init_seed", "allow_network"},
                 "backend");
  BackendConfig c;
  read(j, "model_name", c.model_name);
  read(j, "input_size", c.input_size);
  read(j, "joint_dim", c.joint_dim);
  read(j, "device", c.device);
  read(j, "weights", c.weights);
  read(j, "image_hidden", c.image_hidden);
  read(j, "text_width", c.text_width);
  read(j, "vocab_size", c.vocab_size);
  read(j, "context_length", c.context_length);
  read(j, "logit_scale", c.logit_scale);
  c.word_mode = parse_word_mode(read_string(j, "word_mode", std::string(to_string(c.word_mode))));
  read(j, "init_seed", c.init_seed);
  read(j, "allow_network", c.allow_network);
  c.validate();
  return c;
}

json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"weight_decay", c.weight_decay},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"scheduler", std::string(to_string(c.scheduler))},
          {"scheduler_period", c.scheduler_period},
          {"min_learning_rate", c.min_learning_rate},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"epsilon", c.epsilon},
          {"seed", c.seed},
          {"task", std::string(to_string(c.task))},
          {"scheme", std::string(to_string(c.scheme))},
          {"alpha_mode", std::string(to_string(c.alpha_mode))},
          {"image_input", std::string(to_string(c.image_input))},
          {"patches_n", c.patches_n},
          {"custom_levels", c.custom_levels},
          {"cross_task", c.cross_task},
          {"freeze_image_tower", c.freeze_image_tower},
          {"freeze_text_tower", c.freeze_text_tower},
          {"select_best", c.select_best}};
}

TrainConfig train_from_json(const json& j) {
  reject_unknown(j,
                 {"learning_rate", "weight_decay", "epochs", "batch_size", "scheduler",
                  "scheduler_period", "min_learning_rate", "beta1", "beta2", "epsilon", "seed",
                  "task", "scheme", "alpha_mode", "image_input", "patches_n", "custom_levels",
                  "cross_task", "freeze_image_tower", "freeze_text_tower", "select_best"},
                 "train");
  TrainConfig c;
  read(j, "learning_rate", c.learning_rate);
  read(j, "weight_decay", c.weight_decay);
  read(j, "epochs", c.epochs);
  read(j, "batch_size", c.batch_size);
  c.scheduler = parse_scheduler(read_string(j, "scheduler", std::string(to_string(c.scheduler))));
  read(j, "scheduler_period", c.scheduler_period);
  read(j, "min_learning_rate", c.min_learning_rate);
  read(j, "beta1", c.beta1);
  read(j, "beta2", c.beta2);
  read(j, "epsilon", c.epsilon);
  read(j, "seed", c.seed);
  c.task = parse_task(read_string(j, "task", std::string(to_string(c.task))));
  c.scheme = parse_scheme(read_string(j, "scheme", std::string(to_string(c.scheme))));
  c.alpha_mode = parse_alpha_mode(read_string(j, "alpha_mode", std::string(to_string(c.alpha_mode))));
  c.image_input = parse_image_input(read_string(j, "image_input", std::string(to_string(c.image_input))));
  read(j, "patches_n", c.patches_n);
  read(j, "custom_levels", c.custom_levels);
  read(j, "cross_task", c.cross_task);
  read(j, "freeze_image_tower", c.freeze_image_tower);
  read(j, "freeze_text_tower", c.freeze_text_tower);
  read(j, "select_best", c.select_best);
  return c;
}

json to_json(const RunConfig& c) {
  json train = to_json(c.train);
  json datasets = json::array();
  for (const auto& d : c.datasets) {
    json tasks = json::array();
    for (auto t : d.tasks) tasks.push_back(std::string(to_string(t)));
    datasets.push_back({{"name", d.name},
                        {"manifest", d.manifest.string()},
                        {"image_dir", d.image_dir.string()},
                        {"tasks", tasks}});
  }
  json out = {{"backend", to_json(c.backend)},
              {"task", train["task"]},
              {"scheme", train["scheme"]},
              {"alpha_mode", train["alpha_mode"]},
              {"patches_n", train["patches_n"]},
              {"image_input", train["image_input"]},
              {"datasets", datasets},
              {"output_dir", c.output_dir.string()},
              {"repetitions", c.repetitions},
              {"split_ratio", c.split_ratio},
              {"seed", c.seed},
              {"deterministic", c.deterministic},
              {"zero_shot", c.zero_shot},
              {"logistic_plcc", c.logistic_plcc},
              {"jobs", c.jobs}};
  for (const char* key : {"task", "scheme", "alpha_mode", "patches_n", "image_input"}) train.erase(key);
  out["train"] = train;
  return out;
}

RunConfig run_from_json(const json& j, const std::filesystem::path& base_dir) {
  reject_unknown(j,
                 {"backend", "task", "scheme", "alpha_mode", "patches_n", "image_input", "train",
                  "datasets", "output_dir", "repetitions", "split_ratio", "seed", "deterministic",
                  "zero_shot", "logistic_plcc", "jobs"},
                 "run config");
  RunConfig c;
  if (j.contains("backend")) c.backend = backend_from_json(j.at("backend"));

  json train = j.value("train", json::object());
  if (!train.is_object()) throw ConfigError("train must be a JSON object");
  for (const char* key : {"task", "scheme", "alpha_mode", "patches_n", "image_input"}) {
    if (j.contains(key)) {
      if (train.contains(key)) throw ConfigError(std::string("'") + key + "' given twice");
      train[key] = j.at(key);
    }
  }
  c.train = train_from_json(train);

  if (j.contains("datasets")) {
    for (const auto& d : j.at("datasets")) {
      reject_unknown(d, {"name", "manifest", "image_dir", "tasks"}, "dataset entry");
      DatasetEntry e;
      e.name = read_string(d, "name", "");
      auto resolve = [&](const std::string& p) -> std::filesystem::path {
        if (p.empty()) return {};
        std::filesystem::path path(p);
        return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
      };
      e.manifest = resolve(read_string(d, "manifest", ""));
      e.image_dir = resolve(read_string(d, "image_dir", ""));
      if (d.contains("tasks")) {
        for (const auto& t : d.at("tasks")) e.tasks.push_back(parse_task(t.get<std::string>()));
      }
      if (e.name.empty()) e.name = e.manifest.stem().string();
      c.datasets.push_back(std::move(e));
    }
  }
  std::string out_dir = c.output_dir.string();
  read(j, "output_dir", out_dir);
  c.output_dir = out_dir;
  read(j, "repetitions", c.repetitions);
  read(j, "split_ratio", c.split_ratio);
  read(j, "seed", c.seed);
  read(j, "deterministic", c.deterministic);
  read(j, "zero_shot", c.zero_shot);
  read(j, "logistic_plcc", c.logistic_plcc);
  read(j, "jobs", c.jobs);
  return c;
}

void RunConfig::validate(bool check_paths) const {
  backend.validate();
  train.validate();
  if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
  if (jobs < 1) throw ConfigError("jobs must be at least 1");
  SplitSpec{split_ratio, seed, 0}.validate();
  for (const auto& d : datasets) {
    if (d.manifest.empty()) throw ConfigError("dataset '" + d.name + "' has no manifest");
    if (check_paths && !std::filesystem::exists(d.manifest)) {
      throw InputError("manifest not found: " + d.manifest.string());
    }
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse config " + path.string() + ": " + e.what());
  }
  return run_from_json(j, path.parent_path());
}

std::string config_hash(const RunConfig& cfg) {
  json j = to_json(cfg);
  j.erase("output_dir");
  j.erase("jobs");
  return fmt::format("{:016x}", fnv1a(j.dump()));
}

}  // namespace tspmgs

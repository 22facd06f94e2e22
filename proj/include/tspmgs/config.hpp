#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tspmgs/encoder.hpp"
#include "tspmgs/training.hpp"

namespace tspmgs {

struct DatasetEntry {
  std::string name;
  std::filesystem::path manifest;
  std::filesystem::path image_dir;  // empty: the manifest's directory
  std::vector<TaskKind> tasks;      // empty: the run's task
};

/// Everything a CLI command needs. task/scheme/alpha_mode/patches_n/image_input
/// live in `train` and are exposed as top-level keys in the JSON form.
struct RunConfig {
  BackendConfig backend;
  TrainConfig train;
  std::vector<DatasetEntry> datasets;
  std::filesystem::path output_dir = "runs";
  int repetitions = 10;
  double split_ratio = 0.8;
  std::uint64_t seed = 0;
  bool deterministic = true;
  bool zero_shot = false;
  bool logistic_plcc = false;
  int jobs = 1;

  /// Throws ConfigError on inconsistent settings; with check_paths also
  /// InputError when a dataset manifest does not exist.
  void validate(bool check_paths) const;
};

nlohmann::json to_json(const BackendConfig& cfg);
BackendConfig backend_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected. Relative
/// dataset paths resolve against `base_dir`.
RunConfig run_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

/// Reads a JSON run config. Throws InputError if unreadable or unparsable.
RunConfig load_run_config(const std::filesystem::path& path);

/// 16 hex digits identifying every setting that influences results (output
/// directory and job count excluded).
std::string config_hash(const RunConfig& cfg);

}  // namespace tspmgs

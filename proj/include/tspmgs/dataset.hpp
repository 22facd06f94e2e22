#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tspmgs/prompting.hpp"

namespace tspmgs {

struct Sample {
  std::string name;  // file name as listed in the manifest
  std::filesystem::path image_path;
  std::string initial_prompt;
  std::optional<double> mos_perception;  // training target, normalized once normalize_mos ran
  std::optional<double> mos_alignment;
  std::optional<double> raw_mos_perception;  // value as read from the manifest
  std::optional<double> raw_mos_alignment;
  std::optional<std::string> generator_id;

  std::optional<double> mos(TaskKind task) const {
    return task == TaskKind::perception ? mos_perception : mos_alignment;
  }
};

struct LoadReport {
  std::vector<Sample> samples;
  std::size_t rows = 0;
  std::size_t skipped_missing = 0;
  std::vector<std::string> warnings;
};

/// Reads a CSV manifest with header columns name, prompt, mos_quality and
/// optionally mos_align and generator (other columns are ignored). Image
/// paths resolve against image_dir (default: the manifest's directory). Rows
/// whose image file is missing are skipped and counted.
///
/// Throws InputError for a missing manifest, missing required columns, ragged
/// rows, non-numeric MOS values, empty prompts or rows with no MOS at all.
LoadReport load_dataset(const std::filesystem::path& manifest,
                        const std::filesystem::path& image_dir = {});

/// Min-max maps each MOS column onto [0, upper]. Raw values stay in the raw_*
/// fields. Throws InputError when a present column has fewer than two
/// distinct values.
std::vector<Sample> normalize_mos(std::vector<Sample> samples, double upper);

struct SplitSpec {
  double ratio = 0.8;
  std::uint64_t seed = 0;
  int repetition_index = 0;

  void validate() const;
};

struct Split {
  std::vector<Sample> train;
  std::vector<Sample> test;
  int repetition_index = 0;
};

/// Deterministic shuffle keyed by (seed, repetition_index); the first
/// round(ratio * M) samples of the permutation form the training partition.
Split split(const std::vector<Sample>& samples, const SplitSpec& spec);

/// Number of distinct prompts that occur in both partitions.
std::size_t prompt_leakage(const Split& split);

/// CSV with columns name, partition (train|test), repetition_index.
void write_split_manifest(const std::filesystem::path& path, const Split& split);

/// Rebuilds a split from a manifest written by write_split_manifest. Every
/// manifest name must exist in samples; samples absent from the manifest are
/// left out.
Split read_split_manifest(const std::filesystem::path& path, const std::vector<Sample>& samples);

}  // namespace tspmgs

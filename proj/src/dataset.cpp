#include "tspmgs/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "tspmgs/csv.hpp"
#include "tspmgs/errors.hpp"
#include "tspmgs/random.hpp"

namespace tspmgs {
namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_mos(const std::string& cell, std::size_t line, const char* column) {
  const std::string text = trim(cell);
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
    throw InputError("line " + std::to_string(line) + ": non-numeric " + column + " '" + cell + "'");
  }
  return value;
}

void normalize_column(std::vector<Sample>& samples, std::optional<double> Sample::*target,
                      std::optional<double> Sample::*raw, double upper, const char* what) {
  std::set<double> distinct;
  for (const auto& s : samples) {
    if (s.*raw) distinct.insert(*(s.*raw));
  }
  if (distinct.empty()) return;
  if (distinct.size() < 2) throw InputError(std::string("MOS column ") + what + " is constant");
  const double lo = *distinct.begin();
  const double hi = *distinct.rbegin();
  for (auto& s : samples) {
    if (s.*raw) s.*target = (*(s.*raw) - lo) / (hi - lo) * upper;
  }
}

}  // namespace

LoadReport load_dataset(const std::filesystem::path& manifest, const std::filesystem::path& image_dir) {
  std::ifstream in(manifest);
  if (!in) throw InputError("cannot open manifest: " + manifest.string());
  const auto rows = read_csv(in);
  if (rows.empty()) throw InputError("manifest has no header: " + manifest.string());

  std::map<std::string, std::size_t> columns;
  for (std::size_t i = 0; i < rows[0].size(); ++i) columns[trim(rows[0][i])] = i;
  auto column = [&](const char* name) -> std::optional<std::size_t> {
    const auto it = columns.find(name);
    if (it == columns.end()) return std::nullopt;
    return it->second;
  };
  const auto name_col = column("name");
  const auto prompt_col = column("prompt");
  const auto quality_col = column("mos_quality");
  const auto align_col = column("mos_align");
  const auto generator_col = column("generator");
  if (!name_col || !prompt_col || !quality_col) {
    throw InputError("manifest must have columns name, prompt, mos_quality: " + manifest.string());
  }

  const auto root = image_dir.empty() ? manifest.parent_path() : image_dir;
  LoadReport report;
  report.rows = rows.size() - 1;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t line = r + 1;
    if (row.size() != rows[0].size()) {
      throw InputError("line " + std::to_string(line) + ": expected " + std::to_string(rows[0].size()) +
                       " fields, found " + std::to_string(row.size()));
    }
    Sample s;
    s.name = trim(row[*name_col]);
    s.initial_prompt = row[*prompt_col];
    if (s.name.empty()) throw InputError("line " + std::to_string(line) + ": empty image name");
    if (trim(s.initial_prompt).empty()) throw InputError("line " + std::to_string(line) + ": empty prompt");
    s.raw_mos_perception = parse_mos(row[*quality_col], line, "mos_quality");
    if (align_col) s.raw_mos_alignment = parse_mos(row[*align_col], line, "mos_align");
    if (!s.raw_mos_perception && !s.raw_mos_alignment) {
      throw InputError("line " + std::to_string(line) + ": no MOS value");
    }
    s.mos_perception = s.raw_mos_perception;
    s.mos_alignment = s.raw_mos_alignment;
    if (generator_col && !trim(row[*generator_col]).empty()) {
      s.generator_id = trim(row[*generator_col]);
    } else if (const auto cut = s.name.find('_'); cut != std::string::npos && cut > 0) {
      s.generator_id = s.name.substr(0, cut);
    }
    s.image_path = root / s.name;
    std::error_code ec;
    if (!std::filesystem::is_regular_file(s.image_path, ec)) {
      ++report.skipped_missing;
      continue;
    }
    report.samples.push_back(std::move(s));
  }

  if (report.rows == 0) report.warnings.push_back("manifest has no data rows");
  if (report.skipped_missing > 0) {
    report.warnings.push_back(std::to_string(report.skipped_missing) +
                              " rows skipped because their image is missing");
  }
  for (const auto& w : report.warnings) spdlog::warn("{}: {}", manifest.string(), w);
  return report;
}

std::vector<Sample> normalize_mos(std::vector<Sample> samples, double upper) {
  if (!(upper > 0.0)) throw ConfigError("normalization upper bound must be positive");
  normalize_column(samples, &Sample::mos_perception, &Sample::raw_mos_perception, upper, "mos_quality");
  normalize_column(samples, &Sample::mos_alignment, &Sample::raw_mos_alignment, upper, "mos_align");
  return samples;
}

void SplitSpec::validate() const {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must lie strictly between 0 and 1");
  if (repetition_index < 0) throw ConfigError("repetition index must be non-negative");
}

Split split(const std::vector<Sample>& samples, const SplitSpec& spec) {
  spec.validate();
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng{spec.seed, static_cast<std::uint64_t>(spec.repetition_index)};
  rng.shuffle(order);

  const auto n_train = static_cast<std::size_t>(std::lround(spec.ratio * static_cast<double>(samples.size())));
  Split out;
  out.repetition_index = spec.repetition_index;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? out.train : out.test).push_back(samples[order[i]]);
  }
  if (const auto leaked = prompt_leakage(out); leaked > 0) {
    spdlog::warn("split {}: {} prompts appear in both partitions", spec.repetition_index, leaked);
  }
  return out;
}

std::size_t prompt_leakage(const Split& split) {
  std::set<std::string> train_prompts;
  for (const auto& s : split.train) train_prompts.insert(s.initial_prompt);
  std::set<std::string> shared;
  for (const auto& s : split.test) {
    if (train_prompts.count(s.initial_prompt)) shared.insert(s.initial_prompt);
  }
  return shared.size();
}

void write_split_manifest(const std::filesystem::path& path, const Split& split) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write split manifest: " + path.string());
  write_csv_row(out, {"name", "partition", "repetition_index"});
  const auto rep = std::to_string(split.repetition_index);
  for (const auto& s : split.train) write_csv_row(out, {s.name, "train", rep});
  for (const auto& s : split.test) write_csv_row(out, {s.name, "test", rep});
}

Split read_split_manifest(const std::filesystem::path& path, const std::vector<Sample>& samples) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open split manifest: " + path.string());
  const auto rows = read_csv(in);
  if (rows.empty() || rows[0] != CsvRow{"name", "partition", "repetition_index"}) {
    throw InputError("split manifest header must be name,partition,repetition_index");
  }
  std::unordered_map<std::string, const Sample*> by_name;
  for (const auto& s : samples) by_name.emplace(s.name, &s);

  Split out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 3) throw InputError("split manifest line " + std::to_string(r + 1) + " is malformed");
    const auto it = by_name.find(row[0]);
    if (it == by_name.end()) throw InputError("split manifest names unknown image '" + row[0] + "'");
    out.repetition_index = std::stoi(row[2]);
    if (row[1] == "train") {
      out.train.push_back(*it->second);
    } else if (row[1] == "test") {
      out.test.push_back(*it->second);
    } else {
      throw InputError("unknown partition '" + row[1] + "'");
    }
  }
  return out;
}

}  // namespace tspmgs

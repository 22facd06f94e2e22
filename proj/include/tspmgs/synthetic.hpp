#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tspmgs/encoder.hpp"
#include "tspmgs/image.hpp"

namespace tspmgs {

struct SyntheticOptions {
  int count = 50;
  std::uint64_t seed = 7;
  int size = 256;
};

struct SyntheticItem {
  ImageInput image;
  std::string prompt;
  double degradation = 0.0;  // 0 = clean, 1 = heavily blurred and noisy
};

/// Procedural images (gradient background plus coloured shapes) with a
/// per-image blur/noise degradation, and a short prompt naming the content.
/// Fully determined by the options.
std::vector<SyntheticItem> generate_synthetic(const SyntheticOptions& options);

/// Writes <dir>/images/*.png and <dir>/manifest.csv. The MOS columns are the
/// untrained backend's own scores (perception with the adjective scheme,
/// alignment with the adverb scheme, alpha 0.5, five patches), so the ranking
/// is exactly recoverable from the encoder. Returns the manifest path.
std::filesystem::path write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticOptions& options,
                                              const BackendConfig& backend);

}  // namespace tspmgs

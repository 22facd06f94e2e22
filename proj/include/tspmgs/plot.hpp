#pragma once

#include <filesystem>
#include <span>
#include <string>

namespace tspmgs {

/// Writes a PNG scatter plot of predictions (y) against MOS (x) with a
/// least-squares fit line.
void write_scatter_png(const std::filesystem::path& path, std::span<const double> mos,
                       std::span<const double> predictions, const std::string& title);

}  // namespace tspmgs

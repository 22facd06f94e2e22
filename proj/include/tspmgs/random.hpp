#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <utility>
#include <vector>

namespace tspmgs {

/// Portable pseudo-random source. std::mt19937_64 and std::seed_seq are fully
/// specified by the standard, but the std distributions and std::shuffle are
/// not, so every draw is derived here from raw engine output. Same keys give
/// the same stream on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : Rng({seed}) {}
  Rng(std::initializer_list<std::uint64_t> keys);

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal (Box-Muller).
  double normal();
  /// Uniform integer in [0, bound) without modulo bias.
  std::uint64_t below(std::uint64_t bound);

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace tspmgs

#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace selfcorrect {

// Unbiased draw in [0, n) by rejection sampling the top of the engine's range.
// std::mt19937_64's output sequence is pinned by the standard, so results are
// identical across platforms (unlike std::uniform_int_distribution).
inline std::uint64_t draw_bounded(std::mt19937_64& rng, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("draw_bounded: n must be positive");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v = rng();
  while (v >= limit) v = rng();
  return v % n;
}

// In-place Fisher-Yates shuffle driven by draw_bounded.
template <typename T>
void portable_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(draw_bounded(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace selfcorrect

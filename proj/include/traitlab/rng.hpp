#pragma once

#include <cstdint>
#include <random>

namespace traitlab {

// Unbiased integer draw in [0, n) via rejection sampling. Used instead of
// std::uniform_int_distribution, whose output is implementation-defined;
// this keeps sampled sequences identical across standard libraries.
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit =
      std::mt19937_64::max() - std::mt19937_64::max() % n;
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return draw % n;
}

}  // namespace traitlab

#pragma once

// Seeded random streams. The generator is std::mt19937_64, whose output
// sequence is fixed by the C++ standard, and reals are derived from its raw
// 64-bit words by hand (not std::uniform_real_distribution, which differs
// between standard libraries). Golden files therefore do not depend on the
// toolchain.

#include <cstdint>
#include <random>

#include "rnmf/matrix.hpp"

namespace rnmf {

struct RngSeed {
  std::uint64_t value = 0;
  friend bool operator==(RngSeed, RngSeed) = default;
};

class Rng {
 public:
  explicit Rng(RngSeed seed) : engine_(seed.value) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on (0, 1]: the top 53 bits plus one, scaled by 2^-53.
  double next_unit() {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }

  // Uniform on [0, 1).
  double next_unit_closed_open() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound). Rejection sampling keeps it unbiased.
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

 private:
  std::mt19937_64 engine_;
};

// Entries uniform on (0, scale]; never zero.
inline DenseMatrix random_uniform(std::size_t rows, std::size_t cols, Rng& rng,
                                  double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw DomainError("random_uniform: scale must be positive and finite");
  }
  DenseMatrix out(rows, cols);
  for (double& x : out.data()) x = scale * rng.next_unit();
  return out;
}

inline DenseMatrix random_uniform(std::size_t rows, std::size_t cols,
                                  RngSeed seed, double scale) {
  Rng rng(seed);
  return random_uniform(rows, cols, rng, scale);
}

}  // namespace rnmf

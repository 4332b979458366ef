#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace metagree {

// Deterministic random source: the std::mt19937_64 engine (whose output
// sequence is fixed by the standard) plus hand-rolled distributions, so the
// same seed gives bit-identical streams on every platform and stdlib.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal, Box-Muller with a cached spare.
  double normal();

  // Uniform integer in [0, bound), bound > 0, rejection-sampled (no modulo bias).
  std::uint64_t below(std::uint64_t bound);

  // Fisher-Yates shuffle of [0, n) indices written into out.
  template <typename Index>
  void shuffled_indices(std::size_t n, std::vector<Index>& out) {
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<Index>(i);
    for (std::size_t i = n; i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(out[i - 1], out[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Derives an independent stream seed from a root seed and three labels.
// Convention across the project: (stream kind, outer iteration, task index).
// Parallel and serial schedules use the same derivation, which is what makes
// results independent of the thread count.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c);

namespace streams {
inline constexpr std::uint64_t train_task = 1;
inline constexpr std::uint64_t eval_task = 2;
inline constexpr std::uint64_t curves = 3;
}  // namespace streams

}  // namespace metagree

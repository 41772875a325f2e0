#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace qnn {

/// SplitMix64 finalizer; used only to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Mixes a base seed with task identifiers so concurrent tasks get unrelated streams.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> ids);

/// Explicit random stream backed by std::mt19937_64. All draws are defined in
/// terms of raw 64-bit outputs, so sequences do not depend on the standard
/// library's distribution implementations.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}
  static RngStream derived(std::uint64_t base, std::initializer_list<std::uint64_t> ids) {
    return RngStream(derive_seed(base, ids));
  }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool bernoulli(double q) { return uniform() < q; }
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Integer in [0, n) by multiply-shift.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller (one value per call, the pair partner is dropped).
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace qnn

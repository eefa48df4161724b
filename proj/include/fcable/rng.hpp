#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace fcable {

/// Counter-based pseudorandom stream.
///
/// The i-th raw draw is mix13(seed + (i+1) * golden), independent of any
/// generator state, so draws can be produced in any order and from any
/// thread while staying bit-identical for a fixed seed.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Raw 64-bit draw at counter position idx.
  std::uint64_t raw(std::uint64_t idx) const {
    return mix13(seed_ + (idx + 1) * kGolden);
  }

  /// Uniform draw in (0, 1] at counter position idx.
  double uniform(std::uint64_t idx) const {
    return static_cast<double>((raw(idx) >> 11) + 1) * 0x1.0p-53;
  }

  /// Standard normal draw at counter position idx.
  ///
  /// Counters 2j and 2j+1 form one Box-Muller pair; even counters take the
  /// cosine branch and odd counters the sine branch of the same pair.
  double normal(std::uint64_t idx) const {
    const std::uint64_t pair = idx / 2;
    const double u1 = uniform(2 * pair);
    const double u2 = uniform(2 * pair + 1);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    return (idx % 2 == 0) ? r * std::cos(phi) : r * std::sin(phi);
  }

  /// Fills out[0..count) with normals at counter positions base, base+1, ...
  void fill_normals(double* out, std::size_t count, std::uint64_t base) const {
    for (std::size_t i = 0; i < count; ++i) out[i] = normal(base + i);
  }

  std::vector<double> normals(std::size_t count, std::uint64_t base = 0) const {
    std::vector<double> out(count);
    fill_normals(out.data(), count, base);
    return out;
  }

  /// Stafford mix13 finalizer.
  static std::uint64_t mix13(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

  std::uint64_t seed_;
};

/// Seed for an indexed sub-stream (one per Monte Carlo sample).
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t sample_index) {
  return seed ^ CounterRng::mix13(sample_index);
}

}  // namespace fcable

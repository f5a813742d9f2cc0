#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace battlab {

/// Seeded random source shared by the data generator and the model.
///
/// The generator is std::mt19937_64 (fully specified by the standard) and
/// every derived draw is implemented here rather than through the standard
/// distributions, whose output is implementation-defined. Algorithms:
///   - uniform01: top 53 bits of the next 64-bit word, scaled by 2^-53 -> [0,1)
///   - gaussian:  basic Box-Muller on two uniform draws, second value cached
///   - below(n):  rejection sampling on the high bits (unbiased)
///   - shuffle:   Fisher-Yates driven by below()
/// Given one seed the full draw sequence is reproducible on any platform up
/// to libm rounding in sqrt/log/cos.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal draw (Box-Muller).
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0,1] so log(u1) is finite.
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  double gaussian(double mean, double sd) { return mean + sd * gaussian(); }

  /// Unbiased integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

  /// In-place Fisher-Yates shuffle with pinned draw order.
  template <typename T> void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i + 1));
      std::swap(v[i], v[j]);
    }
  }

private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

} // namespace battlab

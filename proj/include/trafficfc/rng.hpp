#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace trafficfc {

/// Uniform double in [0,1) from one engine draw. The explicit bit mapping is
/// pinned so seeded streams are identical across standard libraries.
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform_in(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * uniform01(gen);
}

/// Gaussian sampler built on a pinned Box-Muller transform. The standard
/// library's normal_distribution is implementation-defined, which would make
/// seeded synthetic data differ between toolchains; this one does not.
class NormalSampler {
public:
  explicit NormalSampler(std::uint64_t seed) : gen_(seed) {}

  /// One N(0,1) draw.
  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform01(gen_);
    } while (u1 <= 0.0);
    const double u2 = uniform01(gen_);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  /// One N(mean, sd^2) draw.
  double next(double mean, double sd) { return mean + sd * next(); }

  std::mt19937_64& engine() { return gen_; }

private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace trafficfc

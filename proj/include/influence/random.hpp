#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace influence {

// Seeded generator. Distributions are implemented here rather than taken
// from <random> so that draws are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::size_t categorical(std::span<const double> probs) {
    double u = uniform();
    std::size_t last = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] <= 0.0) continue;
      last = i;
      if (u < probs[i]) return i;
      u -= probs[i];
    }
    return last;
  }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * n); }

  double normal() {
    // Box-Muller; 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Symmetric Dirichlet(1): normalized unit exponentials.
  std::vector<double> dirichlet1(std::size_t n) {
    std::vector<double> v(n);
    double z = 0.0;
    for (double& x : v) {
      x = -std::log(1.0 - uniform());
      z += x;
    }
    for (double& x : v) x /= z;
    return v;
  }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace influence

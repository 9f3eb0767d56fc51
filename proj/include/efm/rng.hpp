#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace efm {

// mt19937_64 with hand-rolled draws, so that sequences depend only on the
// seed and not on the standard library's distribution implementations.
class DeterministicRng {
public:
  explicit DeterministicRng(std::uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; the sine branch is discarded to keep one draw per call.
  double gaussian(double sigma) {
    double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    double u2 = uniform();
    return sigma * std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t next_below(std::uint64_t n) { return n == 0 ? 0 : gen_() % n; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  std::mt19937_64 gen_;
};

}  // namespace efm

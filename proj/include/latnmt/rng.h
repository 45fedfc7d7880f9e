#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace latnmt {

// Seeded RNG with self-contained draw helpers so runs are reproducible
// independent of standard-library distribution internals.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : eng_(seed) {}

  uint64_t bits() { return eng_(); }

  // uniform in [0, 1)
  double uniform() { return (eng_() >> 11) * (1.0 / 9007199254740992.0); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  int below(int n) { return static_cast<int>(bits() % static_cast<uint64_t>(n)); }

  bool bernoulli(double p) { return uniform() < p; }

  template <class T>
  void shuffle(std::vector<T>& xs) {
    for (int i = static_cast<int>(xs.size()) - 1; i > 0; --i) {
      int j = below(i + 1);
      std::swap(xs[i], xs[j]);
    }
  }

  Rng fork() { return Rng(bits()); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace latnmt

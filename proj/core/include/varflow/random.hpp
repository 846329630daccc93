#pragma once

#include <cstdint>

#include "varflow/varifold.hpp"

namespace varflow {

/// Counter-based generator: the k-th draw of stream `index` depends only on
/// (seed, index, k), so parallel sampling is independent of the thread split.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t index);

  std::uint64_t next();
  double uniform();  // [0, 1)
  double normal();   // standard Gaussian, Box-Muller

 private:
  std::uint64_t state_;
};

/// Gaussian vector with independent standard entries.
Vector gaussian_vector(CounterRng& rng, int n);

/// Span of d Gaussian vectors (uniform on the Grassmannian).
GrassmannElement random_plane(CounterRng& rng, int n, int d);

}  // namespace varflow

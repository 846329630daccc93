#include "varflow/random.hpp"

#include <cmath>
#include <numbers>

namespace varflow {

namespace {

std::uint64_t splitmix(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t s = seed;
  state_ = splitmix(s) ^ (index * 0xd1b54a32d192ed03ULL);
  splitmix(state_);
}

std::uint64_t CounterRng::next() { return splitmix(state_); }

double CounterRng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double CounterRng::normal() {
  const double u = 1.0 - uniform();  // (0, 1]
  const double v = uniform();
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
}

Vector gaussian_vector(CounterRng& rng, int n) {
  Vector x(n);
  for (int i = 0; i < n; ++i) x(i) = rng.normal();
  return x;
}

GrassmannElement random_plane(CounterRng& rng, int n, int d) {
  for (;;) {
    Matrix basis(n, d);
    for (int j = 0; j < d; ++j) basis.col(j) = gaussian_vector(rng, n);
    const Matrix gram = basis.transpose() * basis;
    if (gram.determinant() > 1e-6) return GrassmannElement::from_basis(basis);
  }
}

}  // namespace varflow

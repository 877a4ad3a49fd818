#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "fermidyn/lattice.hpp"
#include "fermidyn/types.hpp"

namespace fermidyn {

/// Seeded generator with platform-independent real draws (the standard
/// distributions are implementation-defined, mt19937_64 itself is not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi) { return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1)); }
  double normal() {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * uniform());
  }
  Complex complex_normal() { return {normal() / std::numbers::sqrt2, normal() / std::numbers::sqrt2}; }

  Vector complex_vector(Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = complex_normal();
    return v;
  }
  Matrix complex_matrix(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
      for (Index i = 0; i < rows; ++i) m(i, j) = complex_normal();
    }
    return m;
  }
  Matrix hermitian(Index n) {
    const Matrix a = complex_matrix(n, n);
    return 0.5 * (a + a.adjoint());
  }
  OneBodyVector one_body(int sites) { return OneBodyVector(complex_vector(sites)); }
  /// Random vector supported on [center - radius, center + radius].
  OneBodyVector localized(int sites, int center, int radius) {
    Vector v = Vector::Zero(sites);
    for (int i = center - radius; i <= center + radius; ++i) v(i) = complex_normal();
    return OneBodyVector(std::move(v), Support{center, radius});
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace fermidyn

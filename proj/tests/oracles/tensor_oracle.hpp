#pragma once

// Brute-force reference model on the unsymmetrized tensor space h^{(x)n}.
// Everything here is built from first-quantized definitions (tensor
// products, explicit antisymmetrization over permutations) and never calls
// the occupation-basis code paths it is used to check.

#include <cmath>
#include <vector>

#include "fermidyn/fock.hpp"

namespace oracle {

using fermidyn::Complex;
using fermidyn::Matrix;
using fermidyn::Vector;

class TensorSpace {
 public:
  TensorSpace(int modes, int n);

  int modes() const { return modes_; }
  int n() const { return n_; }
  long dim() const { return dim_; }

  long flat(const std::vector<int>& x) const;
  std::vector<int> unflat(long idx) const;

  /// (P_a v)(x) = (1/n!) sum_sigma sgn(sigma) v(x_sigma).
  Vector antisymmetrize(const Vector& v) const;
  /// Isometry F_n -> h^{(x)n}: |S> -> (1/sqrt(n!)) sum_sigma sgn(sigma) e_{s_sigma(1)} (x) ...
  Matrix isometry(const fermidyn::SectorBasis& sector) const;
  /// Applies a one-body matrix on tensor slot `slot`.
  Vector apply_slot(const Matrix& k, int slot, const Vector& v) const;
  /// Applies an m-body matrix (on h^{(x)m}) to the first m slots.
  Vector apply_leading(const Matrix& c, int m, const Vector& v) const;

 private:
  int modes_;
  int n_;
  long dim_;
};

/// Matrix of a*(f): F_n -> F_{n+1} from (a*(f)psi)_{n+1} = sqrt(n+1) P_a (f (x) psi_n).
Matrix creation_block(int modes, int n, const Vector& f);
/// P(C (x) Id)P compressed to F_n for C on F_m.
Matrix embed(int modes, const Matrix& c, int m, int n);
/// (1/n!) sum_sigma K_sigma(1) (x) ... (x) K_sigma(n) compressed to F_n.
Matrix wedge_operator(int modes, const std::vector<Matrix>& ks);
/// Coefficients of P_a(f_1 (x) ... (x) f_n) against the normalized basis of F_n.
Vector wedge_vector(int modes, const std::vector<Vector>& fs);
/// sum_i K acting on slot i, compressed to F_n.
Matrix second_quantized_one_body(int modes, int n, const Matrix& k);
/// sum_{i != j} V(x_i - x_j) compressed to F_n (displacement via callback).
template <class Pair>
Matrix pair_energy(int modes, int n, Pair&& pair) {
  TensorSpace ts(modes, n);
  fermidyn::SectorBasis sector(modes, n);
  const Matrix w = ts.isometry(sector);
  Vector diag(ts.dim());
  for (long x = 0; x < ts.dim(); ++x) {
    const auto xs = ts.unflat(x);
    double e = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i != j) e += pair(xs[static_cast<std::size_t>(i)], xs[static_cast<std::size_t>(j)]);
      }
    }
    diag(x) = e;
  }
  return w.adjoint() * diag.asDiagonal() * w;
}

/// [V, a*(h)]: F_n -> F_{n+1} from the first-quantized kernel
/// (2/sqrt(n+1)) sum_k (-1)^{k+1} h(x_k) sum_{i != k} V(x_i - x_k) psi(x without x_k).
template <class Pair>
Matrix create_commutator_first_quantized(int modes, int n, const Vector& h, Pair&& pair) {
  TensorSpace src(modes, n);
  TensorSpace tgt(modes, n + 1);
  Matrix k = Matrix::Zero(tgt.dim(), src.dim());
  for (long x = 0; x < tgt.dim(); ++x) {
    const auto xs = tgt.unflat(x);
    for (int kk = 0; kk <= n; ++kk) {
      double sum = 0.0;
      for (int i = 0; i <= n; ++i) {
        if (i != kk) sum += pair(xs[static_cast<std::size_t>(i)], xs[static_cast<std::size_t>(kk)]);
      }
      std::vector<int> rest;
      for (int i = 0; i <= n; ++i) {
        if (i != kk) rest.push_back(xs[static_cast<std::size_t>(i)]);
      }
      const double sign = kk % 2 == 0 ? 1.0 : -1.0;
      k(x, src.flat(rest)) += 2.0 / std::sqrt(n + 1.0) * sign * h(xs[static_cast<std::size_t>(kk)]) * sum;
    }
  }
  return tgt.isometry(fermidyn::SectorBasis(modes, n + 1)).adjoint() * k *
         src.isometry(fermidyn::SectorBasis(modes, n));
}

/// sum_{i != j} V(x_i - x_j) as a diagonal on the unsymmetrized tensor space.
template <class Pair>
Vector tensor_pair_diagonal(int modes, int n, Pair&& pair) {
  TensorSpace ts(modes, n);
  Vector d(ts.dim());
  for (long x = 0; x < ts.dim(); ++x) {
    const auto xs = ts.unflat(x);
    double e = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i != j) e += pair(xs[static_cast<std::size_t>(i)], xs[static_cast<std::size_t>(j)]);
      }
    }
    d(x) = e;
  }
  return d;
}

/// sum_i K on slot i, on the unsymmetrized tensor space.
Matrix tensor_one_body(int modes, int n, const Matrix& k);

/// Plain matrix exponential of i*t*H for Hermitian H via eigendecomposition.
Matrix unitary(const Matrix& h, double t);

}  // namespace oracle

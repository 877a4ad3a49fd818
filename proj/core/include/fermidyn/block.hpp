#pragma once

#include <functional>
#include <variant>
#include <vector>

#include "fermidyn/types.hpp"

namespace fermidyn {

/// A complex matrix between two particle sectors.
///
/// Storage is dense when both dimensions are at most kDenseLimit and sparse
/// otherwise; arithmetic results are re-normalized to that rule, so callers
/// never have to care which representation they hold.
class Block {
 public:
  Block() = default;
  explicit Block(Matrix dense);
  explicit Block(SparseMatrix sparse);

  static Block zero(Index rows, Index cols);
  static Block identity(Index dim);
  static Block from_triplets(Index rows, Index cols, const std::vector<Triplet>& triplets);
  static bool prefers_sparse(Index rows, Index cols) { return rows > kDenseLimit || cols > kDenseLimit; }

  Index rows() const;
  Index cols() const;
  bool is_sparse() const { return std::holds_alternative<SparseMatrix>(storage_); }

  Matrix to_dense() const;
  SparseMatrix to_sparse() const;
  const Matrix& dense() const;  // throws ShapeError when stored sparse

  Block adjoint() const;
  Vector apply(const Vector& v) const;
  Complex entry(Index i, Index j) const;

  /// Largest singular value. Dense blocks use an eigen-decomposition of the
  /// smaller Gram matrix; sparse blocks use power iteration on A^dagger A.
  double norm() const;
  double max_abs() const;

  void for_each_nonzero(const std::function<void(Index, Index, Complex)>& fn) const;

  Block& operator+=(const Block& other);
  Block& operator-=(const Block& other);
  Block& operator*=(Complex scale);

  friend Block operator+(Block a, const Block& b) { return a += b; }
  friend Block operator-(Block a, const Block& b) { return a -= b; }
  friend Block operator*(Block a, Complex s) { return a *= s; }
  friend Block operator*(Complex s, Block a) { return a *= s; }
  friend Block operator*(const Block& a, const Block& b);

 private:
  static Block normalized(Matrix dense);
  static Block normalized(SparseMatrix sparse);

  std::variant<Matrix, SparseMatrix> storage_{Matrix(0, 0)};
};

/// Spectral norm of a dense matrix (largest singular value).
double spectral_norm(const Matrix& m);

}  // namespace fermidyn

#include "fermidyn/block.hpp"

#include <algorithm>
#include <cmath>

namespace fermidyn {

namespace {

void require_same_shape(const Block& a, const Block& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string("block shape mismatch in ") + op + ": " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

double sparse_norm(const SparseMatrix& a) {
  if (a.nonZeros() == 0) return 0.0;
  // Deterministic, non-symmetric start vector so no eigenvector is missed by
  // accident of symmetry.
  Vector v(a.cols());
  for (Index i = 0; i < a.cols(); ++i) v(i) = Complex(1.0 + 0.37 * std::sin(1.3 * static_cast<double>(i)), 0.1 * std::cos(0.7 * static_cast<double>(i)));
  v.normalize();
  double estimate = 0.0;
  for (int iter = 0; iter < 2000; ++iter) {
    Vector w = a.adjoint() * (a * v);
    const double lambda = w.norm();
    if (lambda == 0.0) return 0.0;
    v = w / lambda;
    if (iter > 10 && std::abs(lambda - estimate) <= 1e-15 * lambda) {
      estimate = lambda;
      break;
    }
    estimate = lambda;
  }
  return std::sqrt(estimate);
}

}  // namespace

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  const Matrix gram = m.rows() >= m.cols() ? Matrix(m.adjoint() * m) : Matrix(m * m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  const double top = es.eigenvalues().maxCoeff();
  return std::sqrt(std::max(top, 0.0));
}

Block::Block(Matrix dense) { *this = normalized(std::move(dense)); }
Block::Block(SparseMatrix sparse) { *this = normalized(std::move(sparse)); }

Block Block::normalized(Matrix dense) {
  Block b;
  if (prefers_sparse(dense.rows(), dense.cols())) {
    b.storage_ = SparseMatrix(dense.sparseView());
  } else {
    b.storage_ = std::move(dense);
  }
  return b;
}

Block Block::normalized(SparseMatrix sparse) {
  Block b;
  if (prefers_sparse(sparse.rows(), sparse.cols())) {
    sparse.makeCompressed();
    b.storage_ = std::move(sparse);
  } else {
    b.storage_ = Matrix(sparse);
  }
  return b;
}

Block Block::zero(Index rows, Index cols) {
  Block b;
  if (prefers_sparse(rows, cols)) {
    b.storage_ = SparseMatrix(rows, cols);
  } else {
    b.storage_ = Matrix::Zero(rows, cols);
  }
  return b;
}

Block Block::identity(Index dim) {
  if (!prefers_sparse(dim, dim)) return Block(Matrix(Matrix::Identity(dim, dim)));
  SparseMatrix s(dim, dim);
  s.setIdentity();
  return Block(std::move(s));
}

Block Block::from_triplets(Index rows, Index cols, const std::vector<Triplet>& triplets) {
  if (prefers_sparse(rows, cols)) {
    SparseMatrix s(rows, cols);
    s.setFromTriplets(triplets.begin(), triplets.end());
    return Block(std::move(s));
  }
  Matrix d = Matrix::Zero(rows, cols);
  for (const auto& t : triplets) d(t.row(), t.col()) += t.value();
  Block b;
  b.storage_ = std::move(d);
  return b;
}

Index Block::rows() const {
  return std::visit([](const auto& m) -> Index { return m.rows(); }, storage_);
}

Index Block::cols() const {
  return std::visit([](const auto& m) -> Index { return m.cols(); }, storage_);
}

Matrix Block::to_dense() const {
  if (is_sparse()) return Matrix(std::get<SparseMatrix>(storage_));
  return std::get<Matrix>(storage_);
}

SparseMatrix Block::to_sparse() const {
  if (is_sparse()) return std::get<SparseMatrix>(storage_);
  return std::get<Matrix>(storage_).sparseView();
}

const Matrix& Block::dense() const {
  if (is_sparse()) throw ShapeError("block is stored sparse; call to_dense()");
  return std::get<Matrix>(storage_);
}

Block Block::adjoint() const {
  if (is_sparse()) return Block(SparseMatrix(std::get<SparseMatrix>(storage_).adjoint()));
  return Block(Matrix(std::get<Matrix>(storage_).adjoint()));
}

Vector Block::apply(const Vector& v) const {
  if (v.size() != cols()) throw ShapeError("vector length does not match block columns");
  return std::visit([&](const auto& m) -> Vector { return m * v; }, storage_);
}

Complex Block::entry(Index i, Index j) const {
  if (is_sparse()) return std::get<SparseMatrix>(storage_).coeff(i, j);
  return std::get<Matrix>(storage_)(i, j);
}

double Block::norm() const {
  if (is_sparse()) return sparse_norm(std::get<SparseMatrix>(storage_));
  return spectral_norm(std::get<Matrix>(storage_));
}

double Block::max_abs() const {
  if (is_sparse()) {
    double best = 0.0;
    const auto& s = std::get<SparseMatrix>(storage_);
    for (Index k = 0; k < s.nonZeros(); ++k) best = std::max(best, std::abs(s.valuePtr()[k]));
    return best;
  }
  const auto& d = std::get<Matrix>(storage_);
  return d.size() == 0 ? 0.0 : d.cwiseAbs().maxCoeff();
}

void Block::for_each_nonzero(const std::function<void(Index, Index, Complex)>& fn) const {
  if (is_sparse()) {
    const auto& s = std::get<SparseMatrix>(storage_);
    for (Index c = 0; c < s.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(s, c); it; ++it) {
        if (it.value() != Complex(0.0)) fn(it.row(), it.col(), it.value());
      }
    }
    return;
  }
  const auto& d = std::get<Matrix>(storage_);
  for (Index c = 0; c < d.cols(); ++c) {
    for (Index r = 0; r < d.rows(); ++r) {
      if (d(r, c) != Complex(0.0)) fn(r, c, d(r, c));
    }
  }
}

Block& Block::operator+=(const Block& other) {
  require_same_shape(*this, other, "+=");
  if (is_sparse()) {
    std::get<SparseMatrix>(storage_) += other.to_sparse();
  } else {
    std::get<Matrix>(storage_) += other.to_dense();
  }
  return *this;
}

Block& Block::operator-=(const Block& other) {
  require_same_shape(*this, other, "-=");
  if (is_sparse()) {
    std::get<SparseMatrix>(storage_) -= other.to_sparse();
  } else {
    std::get<Matrix>(storage_) -= other.to_dense();
  }
  return *this;
}

Block& Block::operator*=(Complex scale) {
  std::visit([&](auto& m) { m *= scale; }, storage_);
  return *this;
}

Block operator*(const Block& a, const Block& b) {
  if (a.cols() != b.rows()) throw ShapeError("block product dimension mismatch");
  if (!a.is_sparse() && !b.is_sparse()) return Block(Matrix(a.dense() * b.dense()));
  SparseMatrix product = a.to_sparse() * b.to_sparse();
  return Block(std::move(product));
}

}  // namespace fermidyn

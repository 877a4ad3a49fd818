#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "fermidyn/block.hpp"
#include "fermidyn/lattice.hpp"
#include "fermidyn/types.hpp"

namespace fermidyn {

using Occupation = std::uint64_t;

/// n-particle occupation states over `modes` modes, lexicographic in the
/// increasing index tuple (i_1 < ... < i_n).
class SectorBasis {
 public:
  SectorBasis(int modes, int n);

  int n() const { return n_; }
  int modes() const { return modes_; }
  Index dim() const { return static_cast<Index>(states_.size()); }
  Occupation state(Index i) const { return states_[static_cast<std::size_t>(i)]; }
  const std::vector<Occupation>& states() const { return states_; }
  /// Position of an occupation mask in this sector, or -1.
  Index index_of(Occupation mask) const;
  std::vector<int> occupied(Index i) const;

 private:
  int modes_;
  int n_;
  std::vector<Occupation> states_;
  std::unordered_map<Occupation, Index> index_;
};

/// (-1)^{#occupied modes below `mode`}.
inline int creation_sign(Occupation mask, int mode) {
  const Occupation below = mode == 0 ? 0 : (mask & ((Occupation{1} << mode) - 1));
  return (__builtin_popcountll(below) & 1) ? -1 : 1;
}

double binomial(int n, int k);
/// c(n, m) = n! / (n - m)!
double falling_factorial(int n, int m);
double factorial(int n);

/// Truncated antisymmetric Fock space: sectors F_0 .. F_nmax over `modes` modes.
class FockSpace {
 public:
  FockSpace(int modes, int nmax);

  int modes() const { return modes_; }
  int nmax() const { return nmax_; }
  const SectorBasis& sector(int n) const;
  Index dim(int n) const { return sector(n).dim(); }

 private:
  int modes_;
  int nmax_;
  std::vector<SectorBasis> sectors_;
};

using FockSpacePtr = std::shared_ptr<const FockSpace>;
FockSpacePtr make_fock_space(int modes, int nmax);

class FockVector {
 public:
  explicit FockVector(FockSpacePtr space);

  static FockVector vacuum(FockSpacePtr space);
  static FockVector basis_state(FockSpacePtr space, Occupation mask);

  const FockSpace& space() const { return *space_; }
  const FockSpacePtr& space_ptr() const { return space_; }
  Vector& sector(int n) { return sectors_.at(static_cast<std::size_t>(n)); }
  const Vector& sector(int n) const { return sectors_.at(static_cast<std::size_t>(n)); }
  double norm() const;

 private:
  FockSpacePtr space_;
  std::vector<Vector> sectors_;
};

Complex inner(const FockVector& a, const FockVector& b);

/// Graded operator on the truncated Fock space: for every source sector n
/// a block F_n -> F_{n+grade}. Blocks that would leave [0, nmax] are absent
/// and act as zero; missing blocks inside the range are zero as well.
class FockOperator {
 public:
  FockOperator(FockSpacePtr space, int grade);

  static FockOperator identity(FockSpacePtr space);
  static FockOperator scalar(FockSpacePtr space, Complex value);

  int grade() const { return grade_; }
  const FockSpace& space() const { return *space_; }
  const FockSpacePtr& space_ptr() const { return space_; }

  /// True when F_n -> F_{n+grade} lies inside the truncation.
  bool in_range(int n) const;
  bool has_block(int n) const;
  /// Block out of sector n (zero block when unset); throws when out of range.
  Block block(int n) const;
  void set_block(int n, Block b);

  FockOperator adjoint() const;
  FockVector apply(const FockVector& v) const;
  /// ||A Pi_n||.
  double seminorm(int n) const;
  /// max_n ||A Pi_n|| (the operator norm, since blocks have orthogonal ranges).
  double norm() const;

  FockOperator& operator+=(const FockOperator& other);
  FockOperator& operator-=(const FockOperator& other);
  FockOperator& operator*=(Complex s);

  friend FockOperator operator+(FockOperator a, const FockOperator& b) { return a += b; }
  friend FockOperator operator-(FockOperator a, const FockOperator& b) { return a -= b; }
  friend FockOperator operator*(FockOperator a, Complex s) { return a *= s; }
  friend FockOperator operator*(Complex s, FockOperator a) { return a *= s; }
  friend FockOperator operator*(const FockOperator& a, const FockOperator& b);

 private:
  void require_compatible(const FockOperator& other, const char* op) const;

  FockSpacePtr space_;
  int grade_;
  std::vector<std::optional<Block>> blocks_;  // indexed by source sector
};

FockOperator commutator(const FockOperator& a, const FockOperator& b);
FockOperator anticommutator(const FockOperator& a, const FockOperator& b);

FockOperator create(FockSpacePtr space, const OneBodyVector& f);
FockOperator annihilate(FockSpacePtr space, const OneBodyVector& f);
FockOperator number_op(FockSpacePtr space, const OneBodyVector& f);
/// Second quantization dGamma(K) = sum_ij K_ij a*(e_i) a(e_j).
FockOperator one_body_operator(FockSpacePtr space, const Matrix& k);

/// Coefficients of f_1 ^ ... ^ f_n = P_a(f_1 (x) ... (x) f_n) in the
/// orthonormal occupation basis of F_n: det[f_k(s_l)] / sqrt(n!).
Vector wedge_vector(const FockSpace& space, std::span<const OneBodyVector> fs);

/// K_1 ^ ... ^ K_n compressed to F_n (n = ks.size()).
Matrix wedge_operator(const FockSpace& space, std::span<const Matrix> ks);

/// P(C (x) Id_{n-m})P on F_n for a matrix C on F_m.
Block embed(const FockSpace& space, const Matrix& c, int m, int n);

}  // namespace fermidyn

#pragma once

#include <vector>

#include "fermidyn/fock.hpp"
#include "fermidyn/random.hpp"

namespace fermidyn {

/// How components carry the level dependence.
///   normalized: A|F_n = sum_m c(n,m) * embed(C_m, n), components independent of n
///   paper:      A|F_n = sum_m embed(P_m, n) with P_m = c(n,m) * C_m
enum class Convention { normalized, paper };

const char* to_string(Convention c);
Convention parse_convention(const std::string& text);

class SectorDecomposition {
 public:
  SectorDecomposition(FockSpacePtr space, int level, Convention convention);

  int level() const { return level_; }
  Convention convention() const { return convention_; }
  const FockSpace& space() const { return *space_; }
  const FockSpacePtr& space_ptr() const { return space_; }

  const Matrix& component(int m) const;
  void set_component(int m, Matrix c);

  /// Same operator, other bookkeeping: P_m = c(level, m) * C_m.
  SectorDecomposition converted(Convention target) const;

 private:
  FockSpacePtr space_;
  int level_;
  Convention convention_;
  std::vector<Matrix> components_;
};

/// sum_m C_m ^ Id_{n-m} evaluated on F_n (n must equal the level).
Block realize(const SectorDecomposition& d, int n);

/// Canonical decomposition of a grade-0 operator at level n, built upward:
/// C_k = (A|F_k - sum_{m<k} c(k,m) embed(C_m, k)) / c(k,k).
SectorDecomposition extract(const FockOperator& a, int n);

/// kappa_n: drops the top component; in the paper convention component m is
/// scaled by (n-m)/n. Result keeps the input convention.
SectorDecomposition kappa(const SectorDecomposition& d);

/// Largest component difference between two decompositions at equal level.
double component_distance(const SectorDecomposition& a, const SectorDecomposition& b);

// ---------------------------------------------------------------------------

struct ClusteringSample {
  int shift = 0;
  Complex lhs;
  Complex rhs;
  double gap = 0.0;
};

/// <a*(g_1)..a*(T_x g_n) Omega, A a*(f_1)..a*(T_x f_n) Omega> against the
/// factorized <a*(g_1)..a*(g_{n-1}) Omega, A a*(f_1)..a*(f_{n-1}) Omega> <g_n, f_n>.
/// The left side uses A out of sector n, the right side A out of sector n-1.
ClusteringSample clustering_correlator(const OneBodySpace& chain, const FockOperator& a,
                                       const std::vector<OneBodyVector>& fs, const std::vector<OneBodyVector>& gs,
                                       int x);

/// a*(f_1) ... a*(f_k) Omega in sector k.
Vector creation_chain(const FockSpace& space, const std::vector<OneBodyVector>& fs);

// ---------------------------------------------------------------------------

/// A = sum_{k=1}^{kmax} (-1)^k n(f_1) ... n(f_k) for the first kmax basis modes.
FockOperator alternating_number_products(FockSpacePtr space, int kmax);

/// Anti-normal-ordered polynomial B = b Id + B' whose creation operators all
/// use modes below k (so B' kills both witnesses |0..k-1> and |0..k>).
struct SeparationProbe {
  Complex b;
  double residual_short = 0.0;  // ||(A - B) psi_k|| / ||psi_k||
  double residual_long = 0.0;   // ||(A - B) psi_{k+1}|| / ||psi_{k+1}||
  double max_residual() const { return std::max(residual_short, residual_long); }
};

SeparationProbe separation_probe(const FockOperator& a, const FockOperator& b, int k);

/// Random b Id + B' with B' a sum of anti-normal-ordered number-preserving
/// monomials a(e_i..) a*(e_j..), creation modes j < k, degree <= 2.
FockOperator random_separation_candidate(FockSpacePtr space, Rng& rng, int k, Complex& b);

/// Normal-ordered monomial a*(f_1)..a*(f_m) a(g_1)..a(g_m).
FockOperator normal_monomial(FockSpacePtr space, const std::vector<OneBodyVector>& fs,
                             const std::vector<OneBodyVector>& gs);

/// Random number-preserving polynomial: scalar plus `terms` normal-ordered
/// monomials of degree 1..max_degree in random one-body vectors.
FockOperator random_number_preserving(FockSpacePtr space, Rng& rng, int max_degree, int terms);

}  // namespace fermidyn

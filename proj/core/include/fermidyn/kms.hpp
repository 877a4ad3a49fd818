#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "fermidyn/dynamics.hpp"

namespace fermidyn {

/// Gibbs state tr(. e^{-beta H}) / tr(e^{-beta H}) over the truncated Fock
/// space. Weights are stored relative to the global ground energy.
class GibbsState {
 public:
  /// With `strict`, a truncation tail above 1e-6 Z raises TruncationWarning.
  GibbsState(const Hamiltonian& h, double beta, bool strict = false);

  double beta() const { return beta_; }
  const Propagator& propagator() const { return propagator_; }
  const FockSpace& space() const { return propagator_.space(); }
  double ground_energy() const { return ground_; }
  /// Boltzmann weights e^{-beta (E - E_0)} of sector n, eigenbasis order.
  const RealVector& weights(int n) const { return weights_.at(static_cast<std::size_t>(n)); }
  /// sum of all weights (Z e^{beta E_0}).
  double shifted_partition() const { return z_shifted_; }
  double log_partition() const { return std::log(z_shifted_) - beta_ * ground_; }

  /// Bound on sum_{n > nmax} tr e^{-beta H_n} relative to Z, from
  /// E_min(n) >= sum of the n lowest one-body levels + n(n-1) min(0, V_min).
  double tail_bound() const { return tail_; }
  bool truncation_warning() const { return tail_ > 1e-6; }

  Complex expectation(const FockOperator& a) const;
  /// omega(H)
  double energy() const;

 private:
  double beta_;
  Propagator propagator_;
  double ground_ = 0.0;
  std::vector<RealVector> weights_;
  double z_shifted_ = 0.0;
  double tail_ = 0.0;
};

/// The pairs (j, k) contributing to tr(e^{-beta H} A alpha_t(B)): j runs over
/// an eigenbasis of sector n, k over sector n + grade(B).
struct BohrTerm {
  double e_j = 0.0;
  double e_k = 0.0;
  double weight_j = 0.0;  // e^{-beta (E_j - E_0)}
  double weight_k = 0.0;  // e^{-beta (E_k - E_0)}
  Complex ab;             // A_jk B_kj in the eigenbasis
  double frequency() const { return e_k - e_j; }
};

std::vector<BohrTerm> bohr_terms(const GibbsState& state, const FockOperator& a, const FockOperator& b);

/// omega(A alpha_t(B)) = (1/Z) sum w_j A_jk B_kj e^{it(E_k - E_j)}.
Complex two_point(const GibbsState& state, const FockOperator& a, const FockOperator& b, double t);

struct KmsExactReport {
  Complex lhs;
  Complex rhs;
  double residual = 0.0;
  double scale = 0.0;  // (1/Z) sum |w_j A_jk B_kj|
  double relative() const { return scale > 0.0 ? residual / scale : residual; }
};

/// omega(A alpha_t(B)) against omega(alpha_{t - i beta}(B) A), the right side
/// evaluated with the complex-time factors e^{(it + beta)E} directly.
/// OverflowGuard if beta * spread(E) > 500.
KmsExactReport kms_exact_identity(const GibbsState& state, const FockOperator& a, const FockOperator& b, double t);

/// f(z) = (1/2pi) int fhat(xi) e^{i xi z} dxi, fhat a C-infinity bump with
/// fhat(0) = 1 supported on [-xi_max, xi_max].
class TestFunction {
 public:
  explicit TestFunction(double xi_max, int panels = 256);

  double xi_max() const { return xi_max_; }
  double fourier(double xi) const;
  /// f(t + i y)
  Complex operator()(double t, double y = 0.0) const;
  /// Time window outside which |f(t + i y)| < threshold, scanned on a grid.
  double decay_radius(double y, double threshold) const;

 private:
  static constexpr int kNodes = 16;
  double xi_max_;
  int panels_;
  GaussRule rule_;
  std::array<double, kNodes> offsets_{};
  std::vector<double> samples_;  // fhat on the rule's nodes
};

struct KmsIntegralReport {
  Complex lhs;            // closed form of int f(t) omega(A alpha_t(B)) dt
  Complex rhs;            // closed form of int f(t + i beta) omega(alpha_t(B) A) dt
  double residual = 0.0;
  double scale = 0.0;
  Complex lhs_quadrature;
  Complex rhs_quadrature;
  double quadrature_gap = 0.0;    // max closed-form / quadrature difference
  double quadrature_error = 0.0;  // node-doubling estimate of the time quadrature
  double max_frequency = 0.0;     // largest weighted Bohr frequency
  double relative() const { return scale > 0.0 ? residual / scale : residual; }
};

/// Both sides of the integrated KMS condition. FrequencyCoverageError if a
/// Bohr frequency carrying weight above 1e-14 lies outside the support of fhat.
KmsIntegralReport kms_integral_identity(const GibbsState& state, const FockOperator& a, const FockOperator& b,
                                        const TestFunction& f, const QuadratureSpec& quad, bool time_quadrature = true);

/// Right side computed with the wrong Boltzmann weight e^{-beta H / 2}.
KmsIntegralReport kms_negative_control(const Hamiltonian& h, double beta, const FockOperator& a,
                                       const FockOperator& b, const TestFunction& f);

/// Largest Bohr frequency whose term carries weight above `cutoff`.
double max_weighted_frequency(const GibbsState& state, const FockOperator& a, const FockOperator& b,
                              double cutoff = 1e-14);

struct NamedObservable {
  std::string name;
  FockOperator op;
};

struct TrapSweepRow {
  double trap_length = 0.0;
  std::string observable;
  Complex value;
  double increment = 0.0;  // |value - value at previous L|, 0 on the first row
  double tail_bound = 0.0;
};

/// Builds one trapped Gibbs state per L (increasing order is not enforced).
std::vector<TrapSweepRow> trap_sweep(const FockSpacePtr& space, const PairInteraction& interaction,
                                     const std::vector<NamedObservable>& observables, double beta,
                                     const std::vector<double>& lengths);

/// Grand-canonical free occupation sum_k |phi_k(c)|^2 / (1 + e^{beta eps_k}).
double free_occupation(const RealMatrix& one_body, double beta, int site);

/// Central difference of log Z in beta against -omega(H).
double beta_derivative_gap(const Hamiltonian& h, double beta, double step = 1e-4);

}  // namespace fermidyn

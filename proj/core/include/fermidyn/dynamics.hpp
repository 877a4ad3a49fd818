#pragma once

#include <optional>
#include <vector>

#include "fermidyn/fock.hpp"
#include "fermidyn/lattice.hpp"
#include "fermidyn/quadrature.hpp"

namespace fermidyn {

enum class HamiltonianKind { free, interacting, trapped };

const char* to_string(HamiltonianKind k);

/// H_n = dGamma(h) + sum_{i != j} V(s_i - s_j) on every sector, with h the
/// kinetic matrix (plus x^2/L^4 when trapped).
class Hamiltonian {
 public:
  static Hamiltonian free(FockSpacePtr space, const OneBodySpace& chain);
  static Hamiltonian interacting(FockSpacePtr space, const PairInteraction& interaction);
  static Hamiltonian trapped(FockSpacePtr space, const PairInteraction& interaction, double trap_length);

  HamiltonianKind kind() const { return kind_; }
  std::optional<double> trap_length() const { return trap_length_; }
  const FockSpace& space() const { return *space_; }
  const FockSpacePtr& space_ptr() const { return space_; }
  const OneBodySpace& chain() const { return interaction_.space(); }
  const PairInteraction& interaction() const { return interaction_; }
  const RealMatrix& one_body() const { return one_body_; }

  Matrix sector(int n) const;
  Matrix one_body_sector(int n) const;
  /// Diagonal of V_n in the occupation basis.
  RealVector interaction_diagonal(int n) const;
  /// ||V_n||.
  double interaction_norm(int n) const;
  /// Same one-body part, no interaction.
  Hamiltonian free_part() const;
  FockOperator as_operator() const;
  /// The interaction V as a grade-0 operator.
  FockOperator interaction_operator() const;

 private:
  Hamiltonian(HamiltonianKind kind, FockSpacePtr space, PairInteraction interaction, RealMatrix one_body,
              std::optional<double> trap_length);

  HamiltonianKind kind_;
  FockSpacePtr space_;
  PairInteraction interaction_;
  RealMatrix one_body_;
  std::optional<double> trap_length_;
};

/// Per-sector eigendecomposition H_n = U diag(E) U^dagger.
class Propagator {
 public:
  explicit Propagator(const Hamiltonian& h);

  const FockSpace& space() const { return *space_; }
  const FockSpacePtr& space_ptr() const { return space_; }
  const RealVector& energies(int n) const { return energies_.at(static_cast<std::size_t>(n)); }
  const Matrix& eigenvectors(int n) const { return vectors_.at(static_cast<std::size_t>(n)); }
  /// e^{i t H_n}
  Matrix evolution(int n, double t) const;
  /// e^{i t H_{n+grade}} A e^{-i t H_n}
  Matrix heisenberg_block(const Matrix& a, int n, int grade, double t) const;
  FockOperator heisenberg(const FockOperator& a, double t) const;
  /// e^{-i t H} psi
  FockVector schrodinger(const FockVector& psi, double t) const;
  /// ||U diag(E) U^dagger - H_n||
  double reconstruction_error(const Hamiltonian& h, int n) const;

 private:
  FockSpacePtr space_;
  std::vector<RealVector> energies_;
  std::vector<Matrix> vectors_;
};

/// alpha_t(A) = e^{itH} A e^{-itH}
FockOperator heisenberg(const Propagator& p, const FockOperator& a, double t);
/// gamma_t = alpha_t o alpha^0_{-t}
FockOperator interaction_picture(const Propagator& full, const Propagator& free, const FockOperator& a, double t);

// ---------------------------------------------------------------------------

/// Free eigenframes of a source sector n and target sector n + grade, used
/// for the freely evolved interaction V(s) = e^{isH0} V e^{-isH0}.
class InteractionFrame {
 public:
  InteractionFrame(const Hamiltonian& h, int n, int grade);

  int n() const { return n_; }
  int grade() const { return grade_; }
  double source_norm() const { return source_norm_; }
  double target_norm() const { return target_norm_; }

  /// Change of basis into / out of the free eigenframes.
  Matrix to_frame(const Matrix& a) const;
  Matrix from_frame(const Matrix& a) const;

  /// V_{n}(s) and V_{n+grade}(s) in the free eigenframes.
  Matrix source_interaction(double s) const;
  Matrix target_interaction(double s) const;
  /// int_a^b V(s) ds in closed form, occupation basis.
  Matrix integrated_source(double a, double b) const;
  Matrix integrated_target(double a, double b) const;

  /// i [X, V(s)] with V acting as V_n on the right and V_{n+grade} on the
  /// left, in the frame.
  Matrix delta_in_frame(const Matrix& x, double s) const;

 private:
  int n_;
  int grade_;
  RealVector e_src_;
  RealVector e_tgt_;
  Matrix u_src_;
  Matrix u_tgt_;
  Matrix v_src_;  // in frame
  Matrix v_tgt_;
  double source_norm_;
  double target_norm_;
};

struct QuadratureResult {
  Matrix value;
  double error = 0.0;  // node-doubling estimate
};

/// Delta_n(t)(A) = i int_0^t [A, V(s)] ds on a block F_n -> F_{n+grade}.
QuadratureResult delta_n(const InteractionFrame& frame, const Matrix& a, double t, const QuadratureSpec& quad);

enum class DysonOrdering {
  interaction_picture,  // D_l = i^l int_{s_1<..<s_l} [V(s_1),[V(s_2),..[V(s_l),A]]], sums to gamma_t
  literal_recursion,    // D_l(t) = int_0^t i[D_{l-1}(s), V(s)] ds
};

const char* to_string(DysonOrdering o);
DysonOrdering parse_dyson_ordering(const std::string& text);

struct DysonTerm {
  int order = 0;
  Matrix value;
  double norm = 0.0;
  double error = 0.0;
  double bound = 0.0;  // analytic term bound
};

struct DysonResult {
  Matrix sum;
  std::vector<DysonTerm> terms;
  double tail_bound = 0.0;
  double quadrature_error = 0.0;
};

class DysonSeries {
 public:
  DysonSeries(const Hamiltonian& h, int n, int grade);

  const InteractionFrame& frame() const { return frame_; }
  /// 2 ||V_n|| for grade 0, ||V_n|| + ||V_{n+1}|| for grade +1.
  double rate() const;

  /// D_0 .. D_order at time t.
  std::vector<DysonTerm> terms(const Matrix& seed, double t, int order, const QuadratureSpec& quad,
                               DysonOrdering ordering = DysonOrdering::interaction_picture) const;
  /// Partial sum up to `order`; TailBoundExceeded if the tail bound is above
  /// `tail_tolerance`.
  DysonResult sum(const Matrix& seed, double t, int order, const QuadratureSpec& quad, double tail_tolerance,
                  DysonOrdering ordering = DysonOrdering::interaction_picture) const;

  /// sum_{l > order} (rate |t|)^l / l! * seed_norm
  double tail_bound(double t, int order, double seed_norm) const;
  /// (rate |t|)^l / l! * seed_norm
  double term_bound(double t, int l, double seed_norm) const;
  /// Smallest order whose next term bound is below tol.
  int order_for(double t, double seed_norm, double tol) const;

 private:
  std::vector<DysonTerm> run(const Matrix& seed_frame, double t, int order, int nodes, DysonOrdering ordering) const;

  InteractionFrame frame_;
};

// ---------------------------------------------------------------------------

/// [V, a*(h)] and [V, a(h)] assembled from the explicit kernels.
FockOperator create_commutator_kernel(const Hamiltonian& h, const OneBodyVector& v);
FockOperator annihilate_commutator_kernel(const Hamiltonian& h, const OneBodyVector& v);
/// {a*(f), [V, a(h)]} from the two-line kernel (diagonal and hopping lines).
FockOperator anticommutator_kernel(const Hamiltonian& h, const OneBodyVector& f, const OneBodyVector& v);
/// {a*(f), [V, a*(h)]} = 2 sum_{p != q} V(p - q) f_p h_q a*_q a*_p.
FockOperator create_anticommutator_kernel(const Hamiltonian& h, const OneBodyVector& f, const OneBodyVector& v);

struct CommutatorKernels {
  FockOperator create;      // [V, a*(h)], grade +1
  FockOperator annihilate;  // [V, a(h)], grade -1
  double mismatch = 0.0;    // against the matrix commutators
};

/// Builds both commutators from their kernels and compares against the
/// matrix commutators; KernelMismatch above `tolerance`.
CommutatorKernels commutator_kernels(const Hamiltonian& h, const OneBodyVector& v, double tolerance = 1e-12);

struct SupportReport {
  int distance = 0;
  int interaction_range = 0;
  double annihilate_norm = 0.0;  // ||{a*(f), [V, a(h)]}||
  double create_norm = 0.0;      // ||{a*(f), [V, a*(h)]}||
  bool separated() const { return distance > interaction_range; }
  double norm() const { return std::max(annihilate_norm, create_norm); }
};

/// Requires an open chain and declared supports on f and h.
SupportReport support_vanishing_check(const Hamiltonian& h, const OneBodyVector& f, const OneBodyVector& v);

// ---------------------------------------------------------------------------

struct CompatReport {
  double residual = 0.0;
  double quadrature_error = 0.0;
};

/// Gap between realize(kappa(extract(Delta(t)(A), n)), n-1) in the paper
/// convention and Delta_{n-1}(t)(A|F_{n-1}).
CompatReport kappa_delta_compat(const Hamiltonian& h, const FockOperator& a, double t, int n,
                                const QuadratureSpec& quad);
/// Same with alpha_t in place of Delta(t).
CompatReport kappa_alpha_compat(const Propagator& p, const FockOperator& a, double t, int n);

struct CreationDeltaReport {
  double identity_residual = 0.0;
  double quadrature_error = 0.0;
  double kernel_mismatch = 0.0;  // weak form vs direct contraction
  double kernel_hermiticity = 0.0;
  Matrix kernel;                 // int_0^t K(s) ds on the one-body space
};

/// a(f) Delta_n(t)(a*(f)) = i a(f)a*(f) int V_n - i a(f) int V_{n+1} a*(f) on
/// F_n, and int_0^t K(s) ds from <phi, K(s) g> = 2 <f (x) phi, V_01(s) f (x) g>.
CreationDeltaReport creation_delta_identity(const Hamiltonian& h, const OneBodyVector& f, double t, int n,
                                 const QuadratureSpec& quad);

/// int_0^t K(s) ds with K(s) = 2 U(s) diag_y(sum_x |(U(s)^dagger f)(x)|^2 V(x - y)) U(s)^dagger,
/// U(s) = e^{isT}, by adaptive quadrature.
QuadratureResult k_kernel_quadrature(const Hamiltonian& h, const OneBodyVector& f, double t, double tolerance);
/// The same integral from the two-particle weak form in closed form.
Matrix k_kernel_weak_form(const Hamiltonian& h, const OneBodyVector& f, double t);

// ---------------------------------------------------------------------------

/// Real continuous window with compact support [lo, hi].
class WindowFunction {
 public:
  /// exp(-1/(1-u^2)) bump on [center - w, center + w], unit integral.
  static WindowFunction bump(double center, double half_width);
  /// Piecewise-linear interpolation of samples on an even grid over [lo, hi];
  /// the end samples must vanish.
  static WindowFunction from_samples(double lo, double hi, std::vector<double> samples);

  double operator()(double s) const;
  double lo() const { return lo_ + shift_; }
  double hi() const { return hi_ + shift_; }
  /// s -> f(s - t)
  WindowFunction shifted(double t) const;
  /// int |f| by quadrature.
  double abs_integral() const;
  /// int |f(s - t) - f(s)| ds
  double shift_variation(double t) const;

 private:
  enum class Kind { bump, samples };
  WindowFunction(Kind kind, double lo, double hi, std::vector<double> samples, double scale);

  Kind kind_;
  double lo_;
  double hi_;
  std::vector<double> samples_;
  double scale_;
  double shift_ = 0.0;
};

struct TimeAverage {
  FockOperator value;
  double error = 0.0;
};

/// A_f = int f(s) alpha_s(A) ds, blockwise in the eigenframes of H.
TimeAverage time_average(const Propagator& p, const FockOperator& a, const WindowFunction& f,
                         const QuadratureSpec& quad);

/// int_0^t delta_n(s)(D(s)) ds against the Riemann form
/// sum_j (Delta_n(jt/k) - Delta_n((j-1)t/k))(D(jt/k)) with D(s) = alpha_s(A).
struct RiemannSample {
  int k = 0;
  double gap = 0.0;
};
std::vector<RiemannSample> riemann_sum_sweep(const Hamiltonian& h, const Propagator& p, const Matrix& a, int n,
                                             double t, const std::vector<int>& ks, const QuadratureSpec& quad);

/// Mass of the m-particle component of extract(A, n) on index tuples that
/// leave the ball of radius r around `center`.
double component_mass_outside(const FockOperator& a, int n, int m, int center, int radius);

}  // namespace fermidyn

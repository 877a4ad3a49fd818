#include "fermidyn/kms.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numbers>

namespace fermidyn {

GibbsState::GibbsState(const Hamiltonian& h, double beta, bool strict) : beta_(beta), propagator_(h) {
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  const int nmax = space().nmax();
  ground_ = std::numeric_limits<double>::infinity();
  for (int n = 0; n <= nmax; ++n) ground_ = std::min(ground_, propagator_.energies(n).minCoeff());
  weights_.resize(static_cast<std::size_t>(nmax + 1));
  for (int n = 0; n <= nmax; ++n) {
    const RealVector& e = propagator_.energies(n);
    RealVector w(e.size());
    for (Index i = 0; i < e.size(); ++i) w(i) = std::exp(-beta_ * (e(i) - ground_));
    z_shifted_ += w.sum();
    weights_[static_cast<std::size_t>(n)] = std::move(w);
  }
  // Per-sector lower bound on the ground energy beyond the truncation.
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(h.one_body(), Eigen::EigenvaluesOnly);
  const RealVector eps = es.eigenvalues();
  const double vmin = std::min(0.0, h.interaction().profile().min_value());
  const int modes = space().modes();
  double tail = 0.0;
  for (int n = nmax + 1; n <= modes; ++n) {
    const double emin = eps.head(n).sum() + n * (n - 1.0) * vmin;
    tail += binomial(modes, n) * std::exp(-beta_ * (emin - ground_));
  }
  tail_ = tail / z_shifted_;
  if (strict && truncation_warning()) {
    throw TruncationWarning("Gibbs truncation tail " + std::to_string(tail_) + " Z exceeds 1e-6 Z; raise nmax");
  }
}

Complex GibbsState::expectation(const FockOperator& a) const {
  if (a.grade() != 0) return 0.0;
  Complex acc = 0.0;
  for (int n = 0; n <= space().nmax(); ++n) {
    if (!a.has_block(n)) continue;
    const Matrix& u = propagator_.eigenvectors(n);
    const Matrix frame = u.adjoint() * a.block(n).to_dense() * u;
    const RealVector& w = weights(n);
    for (Index j = 0; j < w.size(); ++j) acc += w(j) * frame(j, j);
  }
  return acc / z_shifted_;
}

double GibbsState::energy() const {
  double acc = 0.0;
  for (int n = 0; n <= space().nmax(); ++n) acc += weights(n).dot(propagator_.energies(n));
  return acc / z_shifted_;
}

// ---------------------------------------------------------------------------

std::vector<BohrTerm> bohr_terms(const GibbsState& state, const FockOperator& a, const FockOperator& b) {
  std::vector<BohrTerm> out;
  if (a.grade() != -b.grade()) return out;
  const auto& p = state.propagator();
  for (int n = 0; n <= state.space().nmax(); ++n) {
    const int m = n + b.grade();
    if (!b.in_range(n) || !a.in_range(m) || !b.has_block(n) || !a.has_block(m)) continue;
    const Matrix at = p.eigenvectors(n).adjoint() * a.block(m).to_dense() * p.eigenvectors(m);
    const Matrix bt = p.eigenvectors(m).adjoint() * b.block(n).to_dense() * p.eigenvectors(n);
    const RealVector& ej = p.energies(n);
    const RealVector& ek = p.energies(m);
    for (Index j = 0; j < ej.size(); ++j) {
      for (Index k = 0; k < ek.size(); ++k) {
        out.push_back({ej(j), ek(k), state.weights(n)(j), state.weights(m)(k), at(j, k) * bt(k, j)});
      }
    }
  }
  return out;
}

Complex two_point(const GibbsState& state, const FockOperator& a, const FockOperator& b, double t) {
  Complex acc = 0.0;
  for (const auto& term : bohr_terms(state, a, b)) acc += term.weight_j * term.ab * std::polar(1.0, t * term.frequency());
  return acc / state.shifted_partition();
}

KmsExactReport kms_exact_identity(const GibbsState& state, const FockOperator& a, const FockOperator& b, double t) {
  const auto terms = bohr_terms(state, a, b);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& term : terms) {
    lo = std::min({lo, term.e_j, term.e_k});
    hi = std::max({hi, term.e_j, term.e_k});
  }
  if (!terms.empty() && state.beta() * (hi - lo) > 500.0) {
    throw OverflowGuard("beta * spread(E) = " + std::to_string(state.beta() * (hi - lo)) +
                        " exceeds 500; lower beta or shrink the truncation");
  }
  KmsExactReport out;
  Complex lhs = 0.0;
  Complex rhs = 0.0;
  double scale = 0.0;
  for (const auto& term : terms) {
    const Complex phase = std::polar(1.0, t * term.frequency());
    lhs += term.weight_j * term.ab * phase;
    // e^{-beta E_k} e^{(it + beta) E_k} B_kj e^{-(it + beta) E_j} A_jk
    rhs += term.weight_k * std::exp(state.beta() * term.frequency()) * phase * term.ab;
    scale += term.weight_j * std::abs(term.ab);
  }
  const double z = state.shifted_partition();
  out.lhs = lhs / z;
  out.rhs = rhs / z;
  out.scale = scale / z;
  out.residual = std::abs(out.lhs - out.rhs);
  return out;
}

// ---------------------------------------------------------------------------

TestFunction::TestFunction(double xi_max, int panels)
    : xi_max_(xi_max), panels_(panels) {
  if (!(xi_max > 0.0)) throw ConfigError("test function support must be positive");
  if (panels < 1) throw ConfigError("test function needs at least one panel");
  rule_ = composite_gauss_legendre(kNodes, panels, -xi_max, xi_max);
  const auto base = gauss_legendre(kNodes, -xi_max / panels, xi_max / panels);
  std::copy(base.nodes.begin(), base.nodes.end(), offsets_.begin());
  samples_.reserve(rule_.nodes.size());
  for (double xi : rule_.nodes) samples_.push_back(fourier(xi));
}

double TestFunction::fourier(double xi) const {
  const double u = xi / xi_max_;
  if (std::abs(u) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - u * u));
}

Complex TestFunction::operator()(double t, double y) const {
  // e^{z xi} with z = -y + i t, factored as e^{z c_p} e^{z (xi - c_p)} over
  // the equally spaced panel centers c_p.
  const Complex z(-y, t);
  const double width = 2.0 * xi_max_ / panels_;
  std::array<Complex, kNodes> local;
  for (int j = 0; j < kNodes; ++j) local[static_cast<std::size_t>(j)] = std::exp(z * offsets_[static_cast<std::size_t>(j)]);
  const Complex step = std::exp(z * width);
  Complex center = std::exp(z * (-xi_max_ + 0.5 * width));
  Complex acc = 0.0;
  std::size_t i = 0;
  for (int p = 0; p < panels_; ++p) {
    Complex panel = 0.0;
    for (int j = 0; j < kNodes; ++j, ++i) panel += rule_.weights[i] * samples_[i] * local[static_cast<std::size_t>(j)];
    acc += center * panel;
    center *= step;
  }
  return acc / (2.0 * std::numbers::pi);
}

double TestFunction::decay_radius(double y, double threshold) const {
  const double step = 0.5 * std::numbers::pi / xi_max_;
  double t_max = 400.0 / xi_max_;
  for (int attempt = 0; attempt < 8; ++attempt, t_max *= 2.0) {
    if (std::abs((*this)(t_max, y)) >= threshold || std::abs((*this)(-t_max, y)) >= threshold) continue;
    double last = 0.0;
    for (double t = 0.0; t <= t_max; t += step) {
      if (std::abs((*this)(t, y)) >= threshold || std::abs((*this)(-t, y)) >= threshold) last = t;
    }
    return last + step;
  }
  throw QuadratureNotConverged("test function does not decay below the threshold");
}

// ---------------------------------------------------------------------------

double max_weighted_frequency(const GibbsState& state, const FockOperator& a, const FockOperator& b, double cutoff) {
  double best = 0.0;
  const double z = state.shifted_partition();
  for (const auto& term : bohr_terms(state, a, b)) {
    if (std::max(term.weight_j, term.weight_k) * std::abs(term.ab) / z > cutoff) {
      best = std::max(best, std::abs(term.frequency()));
    }
  }
  return best;
}

namespace {

struct ClosedForm {
  Complex lhs;
  Complex rhs;
  double scale = 0.0;
};

// lhs from the weights of `state`, rhs from the weights of `weighting` with
// the e^{beta omega} reweighting at `beta`.
ClosedForm closed_form(const GibbsState& state, const GibbsState& weighting, double beta, const FockOperator& a,
                       const FockOperator& b, const TestFunction& f) {
  const auto terms = bohr_terms(state, a, b);
  const auto wterms = bohr_terms(weighting, a, b);
  ClosedForm out;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto& term = terms[i];
    const double fh = f.fourier(-term.frequency());
    out.lhs += term.weight_j * fh * term.ab;
    out.scale += term.weight_j * fh * std::abs(term.ab);
    out.rhs += wterms[i].weight_k * fh * std::exp(beta * term.frequency()) * wterms[i].ab;
  }
  out.lhs /= state.shifted_partition();
  out.scale /= state.shifted_partition();
  out.rhs /= weighting.shifted_partition();
  return out;
}

}  // namespace

KmsIntegralReport kms_integral_identity(const GibbsState& state, const FockOperator& a, const FockOperator& b,
                                        const TestFunction& f, const QuadratureSpec& quad, bool time_quadrature) {
  KmsIntegralReport out;
  out.max_frequency = max_weighted_frequency(state, a, b);
  if (out.max_frequency >= f.xi_max()) {
    throw FrequencyCoverageError("weighted Bohr frequency " + std::to_string(out.max_frequency) +
                                 " lies outside the test function support [-" + std::to_string(f.xi_max()) + ", " +
                                 std::to_string(f.xi_max()) + "]");
  }
  const auto cf = closed_form(state, state, state.beta(), a, b, f);
  out.lhs = cf.lhs;
  out.rhs = cf.rhs;
  out.scale = cf.scale;
  out.residual = std::abs(cf.lhs - cf.rhs);
  if (!time_quadrature) return out;

  // Direct time quadrature of both sides over a window where f has decayed.
  const auto terms = bohr_terms(state, a, b);
  const double z = state.shifted_partition();
  auto lhs_at = [&](double t) {
    Complex acc = 0.0;
    for (const auto& term : terms) acc += term.weight_j * term.ab * std::polar(1.0, t * term.frequency());
    return acc / z;
  };
  auto rhs_at = [&](double t) {
    Complex acc = 0.0;
    for (const auto& term : terms) acc += term.weight_k * term.ab * std::polar(1.0, t * term.frequency());
    return acc / z;
  };
  const double f0 = std::abs(f(0.0, 0.0));
  const double fb = std::abs(f(0.0, state.beta()));
  const double radius = std::max(f.decay_radius(0.0, 1e-12 * f0), f.decay_radius(state.beta(), 1e-12 * fb));
  const double band = f.xi_max() + out.max_frequency;
  const int base_panels = std::max(8, static_cast<int>(std::ceil(2.0 * radius * band / 4.0)));
  auto integrate = [&](int panels, Complex& lhs, Complex& rhs) {
    const GaussRule r = composite_gauss_legendre(std::max(quad.nodes, 2), panels, -radius, radius);
    lhs = 0.0;
    rhs = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
      const double t = r.nodes[i];
      lhs += r.weights[i] * f(t, 0.0) * lhs_at(t);
      rhs += r.weights[i] * f(t, state.beta()) * rhs_at(t);
    }
  };
  Complex lhs1;
  Complex rhs1;
  integrate(base_panels, lhs1, rhs1);
  integrate(2 * base_panels, out.lhs_quadrature, out.rhs_quadrature);
  out.quadrature_error = std::max(std::abs(out.lhs_quadrature - lhs1), std::abs(out.rhs_quadrature - rhs1));
  out.quadrature_gap = std::max(std::abs(out.lhs_quadrature - out.lhs), std::abs(out.rhs_quadrature - out.rhs));
  return out;
}

KmsIntegralReport kms_negative_control(const Hamiltonian& h, double beta, const FockOperator& a,
                                       const FockOperator& b, const TestFunction& f) {
  const GibbsState state(h, beta);
  const GibbsState wrong(h, 0.5 * beta);
  const auto cf = closed_form(state, wrong, beta, a, b, f);
  KmsIntegralReport out;
  out.lhs = cf.lhs;
  out.rhs = cf.rhs;
  out.scale = cf.scale;
  out.residual = std::abs(cf.lhs - cf.rhs);
  out.max_frequency = max_weighted_frequency(state, a, b);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<TrapSweepRow> trap_sweep(const FockSpacePtr& space, const PairInteraction& interaction,
                                     const std::vector<NamedObservable>& observables, double beta,
                                     const std::vector<double>& lengths) {
  std::vector<TrapSweepRow> rows;
  std::vector<Complex> previous(observables.size());
  for (std::size_t li = 0; li < lengths.size(); ++li) {
    const GibbsState state(Hamiltonian::trapped(space, interaction, lengths[li]), beta);
    for (std::size_t oi = 0; oi < observables.size(); ++oi) {
      TrapSweepRow row;
      row.trap_length = lengths[li];
      row.observable = observables[oi].name;
      row.value = state.expectation(observables[oi].op);
      row.increment = li == 0 ? 0.0 : std::abs(row.value - previous[oi]);
      row.tail_bound = state.tail_bound();
      previous[oi] = row.value;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

double free_occupation(const RealMatrix& one_body, double beta, int site) {
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(one_body);
  double acc = 0.0;
  for (Index k = 0; k < es.eigenvalues().size(); ++k) {
    const double phi = es.eigenvectors()(site, k);
    acc += phi * phi / (1.0 + std::exp(beta * es.eigenvalues()(k)));
  }
  return acc;
}

double beta_derivative_gap(const Hamiltonian& h, double beta, double step) {
  const GibbsState up(h, beta + step);
  const GibbsState down(h, beta - step);
  const GibbsState mid(h, beta);
  const double derivative = (up.log_partition() - down.log_partition()) / (2.0 * step);
  return std::abs(derivative + mid.energy());
}

}  // namespace fermidyn

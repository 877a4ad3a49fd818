#include "fermidyn/dynamics.hpp"

#include <cmath>
#include <limits>

#include "fermidyn/parallel.hpp"
#include "fermidyn/sector_algebra.hpp"

namespace fermidyn {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

Matrix one_body_block(const SectorBasis& basis, const RealMatrix& k) {
  const Index dim = basis.dim();
  Matrix out = Matrix::Zero(dim, dim);
  const int modes = basis.modes();
  for (Index c = 0; c < dim; ++c) {
    const Occupation s = basis.state(c);
    for (int j = 0; j < modes; ++j) {
      if (!(s >> j & 1)) continue;
      out(c, c) += k(j, j);
      const Occupation rest = s & ~(Occupation{1} << j);
      const int sj = creation_sign(rest, j);
      for (int i = 0; i < modes; ++i) {
        if (i == j || k(i, j) == 0.0 || (rest >> i & 1)) continue;
        const Index r = basis.index_of(rest | (Occupation{1} << i));
        out(r, c) += k(i, j) * static_cast<double>(sj * creation_sign(rest, i));
      }
    }
  }
  return out;
}

Matrix phase_product(const Matrix& v, const RealVector& left, const RealVector& right, double s) {
  Matrix out(v.rows(), v.cols());
  for (Index b = 0; b < v.cols(); ++b) {
    for (Index a = 0; a < v.rows(); ++a) out(a, b) = v(a, b) * std::polar(1.0, s * (left(a) - right(b)));
  }
  return out;
}

// int_a^b e^{i w s} ds
Complex phase_integral(double w, double a, double b) {
  const double len = b - a;
  if (std::abs(w * len) < 1e-6) {
    const double x = w * len;
    return len * std::polar(1.0, 0.5 * w * (a + b)) * (1.0 - x * x / 24.0);
  }
  return (std::polar(1.0, w * b) - std::polar(1.0, w * a)) / (kI * w);
}

Matrix integrated_phase(const Matrix& v, const RealVector& left, const RealVector& right, double a, double b) {
  Matrix out(v.rows(), v.cols());
  for (Index j = 0; j < v.cols(); ++j) {
    for (Index i = 0; i < v.rows(); ++i) out(i, j) = v(i, j) * phase_integral(left(i) - right(j), a, b);
  }
  return out;
}

double max_seminorm(const FockOperator& op, int lo, int hi) {
  double best = 0.0;
  for (int n = std::max(lo, 0); n <= hi; ++n) {
    if (op.in_range(n)) best = std::max(best, op.seminorm(n));
  }
  return best;
}

std::vector<int> occupied_sites(Occupation s, int modes) {
  std::vector<int> out;
  for (int i = 0; i < modes; ++i) {
    if (s >> i & 1) out.push_back(i);
  }
  return out;
}

}  // namespace

const char* to_string(HamiltonianKind k) {
  switch (k) {
    case HamiltonianKind::free:
      return "free";
    case HamiltonianKind::interacting:
      return "interacting";
    case HamiltonianKind::trapped:
      return "trapped";
  }
  return "?";
}

Hamiltonian::Hamiltonian(HamiltonianKind kind, FockSpacePtr space, PairInteraction interaction, RealMatrix one_body,
                         std::optional<double> trap_length)
    : kind_(kind),
      space_(std::move(space)),
      interaction_(std::move(interaction)),
      one_body_(std::move(one_body)),
      trap_length_(trap_length) {
  if (space_->modes() != interaction_.space().sites()) {
    throw ShapeError("Fock space modes do not match the chain length");
  }
}

Hamiltonian Hamiltonian::free(FockSpacePtr space, const OneBodySpace& chain) {
  PairInteraction none(chain, PotentialProfile::zero(chain.sites()));
  return {HamiltonianKind::free, std::move(space), none, kinetic_matrix(chain), std::nullopt};
}

Hamiltonian Hamiltonian::interacting(FockSpacePtr space, const PairInteraction& interaction) {
  return {HamiltonianKind::interacting, std::move(space), interaction, kinetic_matrix(interaction.space()),
          std::nullopt};
}

Hamiltonian Hamiltonian::trapped(FockSpacePtr space, const PairInteraction& interaction, double trap_length) {
  RealMatrix h = kinetic_matrix(interaction.space()) + trap_matrix(interaction.space(), trap_length);
  return {HamiltonianKind::trapped, std::move(space), interaction, std::move(h), trap_length};
}

Matrix Hamiltonian::one_body_sector(int n) const { return one_body_block(space_->sector(n), one_body_); }

RealVector Hamiltonian::interaction_diagonal(int n) const {
  const auto& basis = space_->sector(n);
  RealVector d(basis.dim());
  for (Index i = 0; i < basis.dim(); ++i) {
    const auto sites = basis.occupied(i);
    d(i) = interaction_.configuration_energy(sites);
  }
  return d;
}

double Hamiltonian::interaction_norm(int n) const {
  const RealVector d = interaction_diagonal(n);
  return d.size() == 0 ? 0.0 : d.cwiseAbs().maxCoeff();
}

Matrix Hamiltonian::sector(int n) const {
  Matrix h = one_body_sector(n);
  h.diagonal() += interaction_diagonal(n).cast<Complex>();
  return h;
}

Hamiltonian Hamiltonian::free_part() const {
  PairInteraction none(chain(), PotentialProfile::zero(chain().sites()));
  const HamiltonianKind kind = kind_ == HamiltonianKind::trapped ? HamiltonianKind::trapped : HamiltonianKind::free;
  return {kind, space_, none, one_body_, trap_length_};
}

FockOperator Hamiltonian::as_operator() const {
  FockOperator op(space_, 0);
  for (int n = 0; n <= space_->nmax(); ++n) op.set_block(n, Block(sector(n)));
  return op;
}

FockOperator Hamiltonian::interaction_operator() const {
  FockOperator op(space_, 0);
  for (int n = 0; n <= space_->nmax(); ++n) {
    const RealVector d = interaction_diagonal(n);
    std::vector<Triplet> trips;
    for (Index i = 0; i < d.size(); ++i) {
      if (d(i) != 0.0) trips.emplace_back(i, i, d(i));
    }
    op.set_block(n, Block::from_triplets(d.size(), d.size(), trips));
  }
  return op;
}

// ---------------------------------------------------------------------------

Propagator::Propagator(const Hamiltonian& h) : space_(h.space_ptr()) {
  const int count = space_->nmax() + 1;
  energies_.resize(static_cast<std::size_t>(count));
  vectors_.resize(static_cast<std::size_t>(count));
  parallel_for(count, [&](int n) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h.sector(n));
    energies_[static_cast<std::size_t>(n)] = es.eigenvalues();
    vectors_[static_cast<std::size_t>(n)] = es.eigenvectors();
  });
}

Matrix Propagator::evolution(int n, double t) const {
  const auto& e = energies(n);
  const auto& u = eigenvectors(n);
  Vector phase(e.size());
  for (Index i = 0; i < e.size(); ++i) phase(i) = std::polar(1.0, t * e(i));
  return u * phase.asDiagonal() * u.adjoint();
}

Matrix Propagator::heisenberg_block(const Matrix& a, int n, int grade, double t) const {
  const auto& e0 = energies(n);
  const auto& u0 = eigenvectors(n);
  const auto& e1 = energies(n + grade);
  const auto& u1 = eigenvectors(n + grade);
  Matrix frame = u1.adjoint() * a * u0;
  for (Index j = 0; j < frame.cols(); ++j) {
    for (Index i = 0; i < frame.rows(); ++i) frame(i, j) *= std::polar(1.0, t * (e1(i) - e0(j)));
  }
  return u1 * frame * u0.adjoint();
}

FockOperator Propagator::heisenberg(const FockOperator& a, double t) const {
  FockOperator out(a.space_ptr(), a.grade());
  for (int n = 0; n <= space_->nmax(); ++n) {
    if (!a.in_range(n) || !a.has_block(n)) continue;
    out.set_block(n, Block(heisenberg_block(a.block(n).to_dense(), n, a.grade(), t)));
  }
  return out;
}

FockVector Propagator::schrodinger(const FockVector& psi, double t) const {
  FockVector out(psi.space_ptr());
  for (int n = 0; n <= space_->nmax(); ++n) out.sector(n) = evolution(n, -t) * psi.sector(n);
  return out;
}

double Propagator::reconstruction_error(const Hamiltonian& h, int n) const {
  const Matrix rebuilt = eigenvectors(n) * energies(n).cast<Complex>().asDiagonal() * eigenvectors(n).adjoint();
  return spectral_norm(rebuilt - h.sector(n));
}

FockOperator heisenberg(const Propagator& p, const FockOperator& a, double t) { return p.heisenberg(a, t); }

FockOperator interaction_picture(const Propagator& full, const Propagator& free, const FockOperator& a, double t) {
  return full.heisenberg(free.heisenberg(a, -t), t);
}

// ---------------------------------------------------------------------------

InteractionFrame::InteractionFrame(const Hamiltonian& h, int n, int grade) : n_(n), grade_(grade) {
  const auto& space = h.space();
  if (n < 0 || n > space.nmax() || n + grade < 0 || n + grade > space.nmax()) {
    throw LevelError("interaction frame leaves the truncation");
  }
  const Hamiltonian h0 = h.free_part();
  auto factor = [&](int m, RealVector& e, Matrix& u, Matrix& v, double& norm) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h0.sector(m));
    e = es.eigenvalues();
    u = es.eigenvectors();
    const RealVector d = h.interaction_diagonal(m);
    v = u.adjoint() * d.cast<Complex>().asDiagonal() * u;
    norm = d.size() == 0 ? 0.0 : d.cwiseAbs().maxCoeff();
  };
  factor(n, e_src_, u_src_, v_src_, source_norm_);
  if (grade == 0) {
    e_tgt_ = e_src_;
    u_tgt_ = u_src_;
    v_tgt_ = v_src_;
    target_norm_ = source_norm_;
  } else {
    factor(n + grade, e_tgt_, u_tgt_, v_tgt_, target_norm_);
  }
}

Matrix InteractionFrame::to_frame(const Matrix& a) const { return u_tgt_.adjoint() * a * u_src_; }
Matrix InteractionFrame::from_frame(const Matrix& a) const { return u_tgt_ * a * u_src_.adjoint(); }

Matrix InteractionFrame::source_interaction(double s) const { return phase_product(v_src_, e_src_, e_src_, s); }
Matrix InteractionFrame::target_interaction(double s) const { return phase_product(v_tgt_, e_tgt_, e_tgt_, s); }

Matrix InteractionFrame::integrated_source(double a, double b) const {
  return u_src_ * integrated_phase(v_src_, e_src_, e_src_, a, b) * u_src_.adjoint();
}

Matrix InteractionFrame::integrated_target(double a, double b) const {
  return u_tgt_ * integrated_phase(v_tgt_, e_tgt_, e_tgt_, a, b) * u_tgt_.adjoint();
}

Matrix InteractionFrame::delta_in_frame(const Matrix& x, double s) const {
  return kI * (x * source_interaction(s) - target_interaction(s) * x);
}

QuadratureResult delta_n(const InteractionFrame& frame, const Matrix& a, double t, const QuadratureSpec& quad) {
  if (quad.nodes < 2) throw ConfigError("quadrature needs at least 2 nodes");
  const Matrix x = frame.to_frame(a);
  double scale = 0.0;
  auto integrate = [&](int nodes) {
    const GaussRule r = gauss_legendre(nodes, 0.0, t);
    Matrix acc = Matrix::Zero(x.rows(), x.cols());
    for (std::size_t j = 0; j < r.nodes.size(); ++j) {
      const Matrix g = frame.delta_in_frame(x, r.nodes[j]);
      scale = std::max(scale, std::abs(r.weights[j]) * g.norm());
      acc += r.weights[j] * g;
    }
    return acc;
  };
  const Matrix coarse = integrate(quad.nodes);
  const Matrix fine = integrate(2 * quad.nodes);
  QuadratureResult out;
  out.value = frame.from_frame(fine);
  // Node doubling difference plus a floor for the rounding of the weighted sum.
  out.error = spectral_norm(fine - coarse) + 16.0 * quad.nodes * kEps * scale;
  if (out.error > quad.tolerance) {
    throw QuadratureNotConverged("Delta_n quadrature changed by " + std::to_string(out.error) +
                                 " under node doubling");
  }
  return out;
}

// ---------------------------------------------------------------------------

const char* to_string(DysonOrdering o) {
  return o == DysonOrdering::interaction_picture ? "interaction-picture" : "literal-recursion";
}

DysonOrdering parse_dyson_ordering(const std::string& text) {
  if (text == "interaction-picture" || text == "interaction_picture") return DysonOrdering::interaction_picture;
  if (text == "literal-recursion" || text == "literal_recursion" || text == "literal") {
    return DysonOrdering::literal_recursion;
  }
  throw ConfigError("unknown Dyson ordering '" + text + "'");
}

namespace {

int dyson_grade(int grade) {
  if (grade != 0 && grade != 1) throw ConfigError("Dyson series implemented for grade 0 and +1 seeds");
  return grade;
}

}  // namespace

DysonSeries::DysonSeries(const Hamiltonian& h, int n, int grade) : frame_(h, n, dyson_grade(grade)) {}

double DysonSeries::rate() const { return frame_.source_norm() + frame_.target_norm(); }

double DysonSeries::term_bound(double t, int l, double seed_norm) const {
  if (l == 0) return seed_norm;
  const double x = rate() * std::abs(t);
  if (x == 0.0) return 0.0;
  return std::exp(l * std::log(x) - std::lgamma(l + 1.0)) * seed_norm;
}

double DysonSeries::tail_bound(double t, int order, double seed_norm) const {
  const double x = rate() * std::abs(t);
  if (x == 0.0) return 0.0;
  double total = 0.0;
  for (int l = order + 1; l < order + 400; ++l) {
    const double term = term_bound(t, l, seed_norm);
    total += term;
    if (l > x && term < 1e-18 * total) break;
  }
  return total;
}

int DysonSeries::order_for(double t, double seed_norm, double tol) const {
  for (int l = 0; l < 400; ++l) {
    if (tail_bound(t, l, seed_norm) < tol) return l;
  }
  throw TailBoundExceeded("no Dyson order below 400 meets the tail tolerance");
}

std::vector<DysonTerm> DysonSeries::run(const Matrix& seed_frame, double t, int order, int nodes,
                                        DysonOrdering ordering) const {
  const CollocationRule c = collocation(nodes, t);
  std::vector<Matrix> vs(static_cast<std::size_t>(nodes));
  std::vector<Matrix> vt(static_cast<std::size_t>(nodes));
  for (int i = 0; i < nodes; ++i) {
    vs[static_cast<std::size_t>(i)] = frame_.source_interaction(c.rule.nodes[static_cast<std::size_t>(i)]);
    vt[static_cast<std::size_t>(i)] = frame_.target_interaction(c.rule.nodes[static_cast<std::size_t>(i)]);
  }
  const RealMatrix& carry = ordering == DysonOrdering::interaction_picture ? c.backward : c.forward;

  std::vector<DysonTerm> out;
  out.push_back({0, seed_frame, 0.0, 0.0, 0.0});
  std::vector<Matrix> r(static_cast<std::size_t>(nodes), seed_frame);
  std::vector<Matrix> g(static_cast<std::size_t>(nodes));
  for (int l = 1; l <= order; ++l) {
    for (int i = 0; i < nodes; ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (ordering == DysonOrdering::interaction_picture) {
        g[k] = kI * (vt[k] * r[k] - r[k] * vs[k]);
      } else {
        g[k] = kI * (r[k] * vs[k] - vt[k] * r[k]);
      }
    }
    Matrix d = Matrix::Zero(seed_frame.rows(), seed_frame.cols());
    for (int j = 0; j < nodes; ++j) d += c.rule.weights[static_cast<std::size_t>(j)] * g[static_cast<std::size_t>(j)];
    for (int i = 0; i < nodes; ++i) {
      Matrix next = Matrix::Zero(seed_frame.rows(), seed_frame.cols());
      for (int j = 0; j < nodes; ++j) next += carry(i, j) * g[static_cast<std::size_t>(j)];
      r[static_cast<std::size_t>(i)] = std::move(next);
    }
    out.push_back({l, std::move(d), 0.0, 0.0, 0.0});
  }
  return out;
}

std::vector<DysonTerm> DysonSeries::terms(const Matrix& seed, double t, int order, const QuadratureSpec& quad,
                                          DysonOrdering ordering) const {
  if (order < 0) throw ConfigError("Dyson order must be nonnegative");
  if (quad.nodes < 2) throw ConfigError("quadrature needs at least 2 nodes");
  const Matrix x = frame_.to_frame(seed);
  const double seed_norm = spectral_norm(seed);
  auto coarse = run(x, t, order, quad.nodes, ordering);
  auto fine = run(x, t, order, 2 * quad.nodes, ordering);
  for (int l = 0; l <= order; ++l) {
    auto& term = fine[static_cast<std::size_t>(l)];
    const double diff = spectral_norm(term.value - coarse[static_cast<std::size_t>(l)].value);
    term.value = l == 0 ? seed : frame_.from_frame(term.value);
    term.norm = spectral_norm(term.value);
    term.bound = term_bound(t, l, seed_norm);
    // Node doubling difference plus a floor for the rounding of the nested sums.
    term.error = l == 0 ? 0.0 : diff + 8.0 * l * quad.nodes * kEps * std::max(term.norm, term.bound);
    if (term.error > quad.tolerance) {
      throw QuadratureNotConverged("Dyson term " + std::to_string(l) + " changed by " + std::to_string(diff) +
                                   " under node doubling");
    }
  }
  return fine;
}

DysonResult DysonSeries::sum(const Matrix& seed, double t, int order, const QuadratureSpec& quad,
                             double tail_tolerance, DysonOrdering ordering) const {
  DysonResult out;
  out.tail_bound = tail_bound(t, order, spectral_norm(seed));
  if (out.tail_bound > tail_tolerance) {
    throw TailBoundExceeded("Dyson tail bound " + std::to_string(out.tail_bound) + " at order " +
                            std::to_string(order) + " exceeds " + std::to_string(tail_tolerance));
  }
  out.terms = terms(seed, t, order, quad, ordering);
  out.sum = Matrix::Zero(seed.rows(), seed.cols());
  for (const auto& term : out.terms) {
    out.sum += term.value;
    out.quadrature_error += term.error;
  }
  return out;
}

// ---------------------------------------------------------------------------

FockOperator create_commutator_kernel(const Hamiltonian& h, const OneBodyVector& v) {
  const auto& space = h.space();
  const int modes = space.modes();
  FockOperator out(h.space_ptr(), 1);
  for (int n = 0; n < space.nmax(); ++n) {
    const auto& src = space.sector(n);
    const auto& tgt = space.sector(n + 1);
    std::vector<Triplet> trips;
    for (Index r = 0; r < tgt.dim(); ++r) {
      const auto x = occupied_sites(tgt.state(r), modes);
      for (std::size_t k = 0; k < x.size(); ++k) {
        const Complex hk = v[x[k]];
        if (hk == Complex(0.0)) continue;
        double sum = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
          if (i != k) sum += h.interaction().pair(x[i], x[k]);
        }
        if (sum == 0.0) continue;
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        const Index c = src.index_of(tgt.state(r) & ~(Occupation{1} << x[k]));
        trips.emplace_back(r, c, 2.0 * sign * sum * hk);
      }
    }
    out.set_block(n, Block::from_triplets(tgt.dim(), src.dim(), trips));
  }
  return out;
}

FockOperator annihilate_commutator_kernel(const Hamiltonian& h, const OneBodyVector& v) {
  const auto& space = h.space();
  const int modes = space.modes();
  FockOperator out(h.space_ptr(), -1);
  for (int n = 1; n <= space.nmax(); ++n) {
    const auto& src = space.sector(n);
    const auto& tgt = space.sector(n - 1);
    std::vector<Triplet> trips;
    for (Index c = 0; c < src.dim(); ++c) {
      const auto x = occupied_sites(src.state(c), modes);
      for (std::size_t k = 0; k < x.size(); ++k) {
        const Complex hk = std::conj(v[x[k]]);
        if (hk == Complex(0.0)) continue;
        double sum = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
          if (i != k) sum += h.interaction().pair(x[i], x[k]);
        }
        if (sum == 0.0) continue;
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        const Index r = tgt.index_of(src.state(c) & ~(Occupation{1} << x[k]));
        trips.emplace_back(r, c, -2.0 * sign * sum * hk);
      }
    }
    out.set_block(n, Block::from_triplets(tgt.dim(), src.dim(), trips));
  }
  return out;
}

FockOperator anticommutator_kernel(const Hamiltonian& h, const OneBodyVector& f, const OneBodyVector& v) {
  const auto& space = h.space();
  const int modes = space.modes();
  FockOperator out(h.space_ptr(), 0);
  for (int n = 0; n <= space.nmax(); ++n) {
    const auto& basis = space.sector(n);
    std::vector<Triplet> trips;
    for (Index r = 0; r < basis.dim(); ++r) {
      const Occupation s = basis.state(r);
      const auto x = occupied_sites(s, modes);
      // Diagonal line: -2 sum_k sum_q conj(h(q)) V(q - x_k) f(q).
      Complex diag = 0.0;
      for (int xk : x) {
        for (int q = 0; q < modes; ++q) diag += std::conj(v[q]) * h.interaction().pair(q, xk) * f[q];
      }
      if (diag != Complex(0.0)) trips.emplace_back(r, r, -2.0 * diag);
      // Exchange line: particle k at p = x_k is replaced by q in the input.
      for (std::size_t k = 0; k < x.size(); ++k) {
        const int p = x[k];
        if (f[p] == Complex(0.0)) continue;
        const Occupation rest = s & ~(Occupation{1} << p);
        const double sk = (k % 2 == 0) ? 1.0 : -1.0;
        for (int q = 0; q < modes; ++q) {
          if (rest >> q & 1) continue;
          const double vq = h.interaction().pair(q, p);
          if (vq == 0.0 || v[q] == Complex(0.0)) continue;
          const Index c = basis.index_of(rest | (Occupation{1} << q));
          trips.emplace_back(r, c, 2.0 * sk * creation_sign(rest, q) * std::conj(v[q]) * vq * f[p]);
        }
      }
    }
    out.set_block(n, Block::from_triplets(basis.dim(), basis.dim(), trips));
  }
  return out;
}

FockOperator create_anticommutator_kernel(const Hamiltonian& h, const OneBodyVector& f, const OneBodyVector& v) {
  const auto& space = h.space();
  const int modes = space.modes();
  FockOperator out(h.space_ptr(), 2);
  for (int n = 0; n + 2 <= space.nmax(); ++n) {
    const auto& src = space.sector(n);
    const auto& tgt = space.sector(n + 2);
    std::vector<Triplet> trips;
    for (Index c = 0; c < src.dim(); ++c) {
      const Occupation s = src.state(c);
      for (int p = 0; p < modes; ++p) {
        if ((s >> p & 1) || f[p] == Complex(0.0)) continue;
        const Occupation sp = s | (Occupation{1} << p);
        for (int q = 0; q < modes; ++q) {
          if ((sp >> q & 1) || v[q] == Complex(0.0)) continue;
          const double vpq = h.interaction().pair(p, q);
          if (vpq == 0.0) continue;
          const Index r = tgt.index_of(sp | (Occupation{1} << q));
          trips.emplace_back(r, c, 2.0 * vpq * f[p] * v[q] * static_cast<double>(creation_sign(s, p) * creation_sign(sp, q)));
        }
      }
    }
    out.set_block(n, Block::from_triplets(tgt.dim(), src.dim(), trips));
  }
  return out;
}

CommutatorKernels commutator_kernels(const Hamiltonian& h, const OneBodyVector& v, double tolerance) {
  const FockOperator vop = h.interaction_operator();
  const FockOperator direct_create = commutator(vop, create(h.space_ptr(), v));
  const FockOperator direct_annihilate = commutator(vop, annihilate(h.space_ptr(), v));
  CommutatorKernels out{create_commutator_kernel(h, v), annihilate_commutator_kernel(h, v), 0.0};
  out.mismatch = std::max((out.create - direct_create).norm(), (out.annihilate - direct_annihilate).norm());
  if (out.mismatch > tolerance) {
    throw KernelMismatch("kernel-built commutator differs from the matrix commutator by " +
                         std::to_string(out.mismatch));
  }
  return out;
}

SupportReport support_vanishing_check(const Hamiltonian& h, const OneBodyVector& f, const OneBodyVector& v) {
  if (h.chain().boundary() != Boundary::open) throw ConfigError("support check needs an open chain");
  if (!f.support() || !v.support()) throw ConfigError("support check needs declared supports on f and h");
  SupportReport out;
  out.distance = support_distance(*f.support(), *v.support());
  out.interaction_range = h.interaction().profile().range();
  const auto space = h.space_ptr();
  const FockOperator vop = h.interaction_operator();
  const FockOperator af = create(space, f);
  const FockOperator grade0 = anticommutator(af, commutator(vop, annihilate(space, v)));
  const FockOperator grade2 = anticommutator(af, commutator(vop, create(space, v)));
  // The top sector of a grade-0 anticommutator would need F_{nmax+1}.
  out.annihilate_norm = max_seminorm(grade0, 0, space->nmax() - 1);
  out.create_norm = max_seminorm(grade2, 0, space->nmax() - 2);
  return out;
}

// ---------------------------------------------------------------------------

CompatReport kappa_delta_compat(const Hamiltonian& h, const FockOperator& a, double t, int n,
                                const QuadratureSpec& quad) {
  if (a.grade() != 0) throw ShapeError("kappa compatibility needs a grade-0 operator");
  if (n < 1) throw LevelError("kappa needs level >= 1");
  CompatReport out;
  FockOperator delta(a.space_ptr(), 0);
  for (int m = 0; m <= n; ++m) {
    const InteractionFrame frame(h, m, 0);
    auto q = delta_n(frame, a.block(m).to_dense(), t, quad);
    out.quadrature_error = std::max(out.quadrature_error, q.error);
    delta.set_block(m, Block(std::move(q.value)));
  }
  const auto d = kappa(extract(delta, n).converted(Convention::paper));
  const Matrix lhs = realize(d, n - 1).to_dense();
  out.residual = spectral_norm(lhs - delta.block(n - 1).to_dense());
  return out;
}

CompatReport kappa_alpha_compat(const Propagator& p, const FockOperator& a, double t, int n) {
  if (a.grade() != 0) throw ShapeError("kappa compatibility needs a grade-0 operator");
  if (n < 1) throw LevelError("kappa needs level >= 1");
  const FockOperator evolved = p.heisenberg(a, t);
  const auto d = kappa(extract(evolved, n).converted(Convention::paper));
  CompatReport out;
  out.residual = spectral_norm(realize(d, n - 1).to_dense() - evolved.block(n - 1).to_dense());
  return out;
}

// ---------------------------------------------------------------------------

CreationDeltaReport creation_delta_identity(const Hamiltonian& h, const OneBodyVector& f, double t, int n,
                                 const QuadratureSpec& quad) {
  const auto space = h.space_ptr();
  if (n + 1 > space->nmax()) throw LevelError("the identity needs sector n + 1 inside the truncation");
  const InteractionFrame frame(h, n, 1);
  const Matrix seed = create(space, f).block(n).to_dense();
  const Matrix af = annihilate(space, f).block(n + 1).to_dense();
  const auto delta = delta_n(frame, seed, t, quad);
  const Matrix lhs = af * delta.value;
  const Matrix rhs = kI * (af * seed * frame.integrated_source(0.0, t)) - kI * (af * frame.integrated_target(0.0, t) * seed);
  CreationDeltaReport out;
  out.identity_residual = spectral_norm(lhs - rhs);
  out.quadrature_error = f.norm() * delta.error;
  const auto route = k_kernel_quadrature(h, f, t, 1e-13);
  out.kernel = k_kernel_weak_form(h, f, t);
  out.kernel_mismatch = spectral_norm(out.kernel - route.value);
  out.kernel_hermiticity = spectral_norm(out.kernel - out.kernel.adjoint());
  return out;
}

QuadratureResult k_kernel_quadrature(const Hamiltonian& h, const OneBodyVector& f, double t, double tolerance) {
  const int m = h.chain().sites();
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(h.one_body());
  const Matrix w = es.eigenvectors().cast<Complex>();
  const RealVector lambda = es.eigenvalues();
  auto kernel_at = [&](double s) {
    Vector phase(m);
    for (int i = 0; i < m; ++i) phase(i) = std::polar(1.0, s * lambda(i));
    const Matrix u = w * phase.asDiagonal() * w.adjoint();
    const Vector uf = u.adjoint() * f.coefficients();
    Vector d = Vector::Zero(m);
    for (int y = 0; y < m; ++y) {
      double acc = 0.0;
      for (int x = 0; x < m; ++x) acc += std::norm(uf(x)) * h.interaction().pair(x, y);
      d(y) = acc;
    }
    return Matrix(2.0 * u * d.asDiagonal() * u.adjoint());
  };
  auto integrate = [&](int panels) {
    const GaussRule r = composite_gauss_legendre(16, panels, 0.0, t);
    Matrix acc = Matrix::Zero(m, m);
    for (std::size_t j = 0; j < r.nodes.size(); ++j) acc += r.weights[j] * kernel_at(r.nodes[j]);
    return acc;
  };
  Matrix prev = integrate(1);
  for (int panels = 2; panels <= 1024; panels *= 2) {
    Matrix next = integrate(panels);
    const double diff = spectral_norm(next - prev);
    if (diff <= tolerance) return {std::move(next), diff};
    prev = std::move(next);
  }
  throw QuadratureNotConverged("K kernel quadrature did not settle");
}

Matrix k_kernel_weak_form(const Hamiltonian& h, const OneBodyVector& f, double t) {
  const int m = h.chain().sites();
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(h.one_body());
  const Matrix w = es.eigenvectors().cast<Complex>();
  const RealVector lambda = es.eigenvalues();
  const Index dim = static_cast<Index>(m) * m;
  // Two-particle frame: W (x) W, index x0 * m + x1, slot 0 first.
  Matrix ww(dim, dim);
  RealVector e2(dim);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      e2(a * m + b) = lambda(a) + lambda(b);
      for (int x0 = 0; x0 < m; ++x0) {
        for (int x1 = 0; x1 < m; ++x1) ww(x0 * m + x1, a * m + b) = w(x0, a) * w(x1, b);
      }
    }
  }
  RealVector v01(dim);
  for (int x0 = 0; x0 < m; ++x0) {
    for (int x1 = 0; x1 < m; ++x1) v01(x0 * m + x1) = h.interaction().pair(x0, x1);
  }
  const Matrix frame = ww.adjoint() * v01.cast<Complex>().asDiagonal() * ww;
  const Matrix integrated = ww * integrated_phase(frame, e2, e2, 0.0, t) * ww.adjoint();
  Matrix k = Matrix::Zero(m, m);
  for (int phi = 0; phi < m; ++phi) {
    for (int g = 0; g < m; ++g) {
      Complex acc = 0.0;
      for (int x0 = 0; x0 < m; ++x0) {
        for (int y0 = 0; y0 < m; ++y0) acc += std::conj(f[x0]) * integrated(x0 * m + phi, y0 * m + g) * f[y0];
      }
      k(phi, g) = 2.0 * acc;
    }
  }
  return k;
}

// ---------------------------------------------------------------------------

namespace {

double bump_profile(double u) { return std::abs(u) >= 1.0 ? 0.0 : std::exp(-1.0 / (1.0 - u * u)); }

double bump_mass() {
  static const double mass = [] {
    const GaussRule r = composite_gauss_legendre(16, 64, -1.0, 1.0);
    double acc = 0.0;
    for (std::size_t j = 0; j < r.nodes.size(); ++j) acc += r.weights[j] * bump_profile(r.nodes[j]);
    return acc;
  }();
  return mass;
}

}  // namespace

WindowFunction::WindowFunction(Kind kind, double lo, double hi, std::vector<double> samples, double scale)
    : kind_(kind), lo_(lo), hi_(hi), samples_(std::move(samples)), scale_(scale) {}

WindowFunction WindowFunction::bump(double center, double half_width) {
  if (!(half_width > 0.0)) throw ConfigError("bump half width must be positive");
  return {Kind::bump, center - half_width, center + half_width, {}, 1.0 / (half_width * bump_mass())};
}

WindowFunction WindowFunction::from_samples(double lo, double hi, std::vector<double> samples) {
  if (!(hi > lo)) throw ConfigError("window support must be a nonempty interval");
  if (samples.size() < 3) throw ConfigError("window needs at least 3 samples");
  if (samples.front() != 0.0 || samples.back() != 0.0) throw ConfigError("window samples must vanish at the ends");
  return {Kind::samples, lo, hi, std::move(samples), 1.0};
}

double WindowFunction::operator()(double s) const {
  const double x = s - shift_;
  if (x <= lo_ || x >= hi_) return 0.0;
  if (kind_ == Kind::bump) {
    const double half = 0.5 * (hi_ - lo_);
    return scale_ * bump_profile((x - (lo_ + half)) / half);
  }
  const double pos = (x - lo_) / (hi_ - lo_) * static_cast<double>(samples_.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= samples_.size()) return samples_.back();
  const double frac = pos - static_cast<double>(i);
  return (1.0 - frac) * samples_[i] + frac * samples_[i + 1];
}

WindowFunction WindowFunction::shifted(double t) const {
  WindowFunction out = *this;
  out.shift_ += t;
  return out;
}

double WindowFunction::abs_integral() const {
  const GaussRule r = composite_gauss_legendre(16, 256, lo(), hi());
  double acc = 0.0;
  for (std::size_t j = 0; j < r.nodes.size(); ++j) acc += r.weights[j] * std::abs((*this)(r.nodes[j]));
  return acc;
}

double WindowFunction::shift_variation(double t) const {
  const WindowFunction moved = shifted(t);
  const double a = std::min(lo(), moved.lo());
  const double b = std::max(hi(), moved.hi());
  const GaussRule r = composite_gauss_legendre(16, 512, a, b);
  double acc = 0.0;
  for (std::size_t j = 0; j < r.nodes.size(); ++j) acc += r.weights[j] * std::abs(moved(r.nodes[j]) - (*this)(r.nodes[j]));
  return acc;
}

TimeAverage time_average(const Propagator& p, const FockOperator& a, const WindowFunction& f,
                         const QuadratureSpec& quad) {
  TimeAverage out{FockOperator(a.space_ptr(), a.grade()), 0.0};
  const int nodes = std::max(quad.nodes, 2);
  for (int n = 0; n <= p.space().nmax(); ++n) {
    if (!a.in_range(n) || !a.has_block(n)) continue;
    const int m = n + a.grade();
    const auto& e0 = p.energies(n);
    const auto& e1 = p.energies(m);
    const Matrix frame = p.eigenvectors(m).adjoint() * a.block(n).to_dense() * p.eigenvectors(n);
    auto weights = [&](int panels) {
      const GaussRule r = composite_gauss_legendre(nodes, panels, f.lo(), f.hi());
      Matrix phi = Matrix::Zero(frame.rows(), frame.cols());
      for (std::size_t k = 0; k < r.nodes.size(); ++k) {
        const double wk = r.weights[k] * f(r.nodes[k]);
        if (wk == 0.0) continue;
        for (Index j = 0; j < phi.cols(); ++j) {
          for (Index i = 0; i < phi.rows(); ++i) phi(i, j) += wk * std::polar(1.0, r.nodes[k] * (e1(i) - e0(j)));
        }
      }
      return phi;
    };
    Matrix prev = weights(2);
    double err = 0.0;
    bool settled = false;
    for (int panels = 4; panels <= 4096; panels *= 2) {
      Matrix next = weights(panels);
      err = spectral_norm(frame.cwiseProduct(next - prev)) + 64.0 * kEps * f.abs_integral() * spectral_norm(frame);
      prev = std::move(next);
      if (err <= quad.tolerance) {
        settled = true;
        break;
      }
    }
    if (!settled) throw QuadratureNotConverged("time average did not settle under panel doubling");
    out.error = std::max(out.error, err);
    out.value.set_block(n, Block(Matrix(p.eigenvectors(m) * frame.cwiseProduct(prev) * p.eigenvectors(n).adjoint())));
  }
  return out;
}

std::vector<RiemannSample> riemann_sum_sweep(const Hamiltonian& h, const Propagator& p, const Matrix& a, int n,
                                             double t, const std::vector<int>& ks, const QuadratureSpec& quad) {
  const InteractionFrame frame(h, n, 0);
  auto d_at = [&](double s) { return p.heisenberg_block(a, n, 0, s); };
  // Reference integral by panelled Gauss-Legendre.
  Matrix exact = Matrix::Zero(a.rows(), a.cols());
  {
    const GaussRule r = composite_gauss_legendre(std::max(quad.nodes, 2), 16, 0.0, t);
    for (std::size_t j = 0; j < r.nodes.size(); ++j) {
      const Matrix v = frame.from_frame(frame.source_interaction(r.nodes[j]));
      const Matrix d = d_at(r.nodes[j]);
      exact += r.weights[j] * (kI * (d * v - v * d));
    }
  }
  std::vector<RiemannSample> out;
  for (int k : ks) {
    if (k < 1) throw ConfigError("Riemann sums need k >= 1");
    Matrix acc = Matrix::Zero(a.rows(), a.cols());
    for (int j = 1; j <= k; ++j) {
      const double s0 = t * (j - 1) / k;
      const double s1 = t * j / k;
      const Matrix v = frame.integrated_source(s0, s1);
      const Matrix d = d_at(s1);
      acc += kI * (d * v - v * d);
    }
    out.push_back({k, spectral_norm(acc - exact)});
  }
  return out;
}

double component_mass_outside(const FockOperator& a, int n, int m, int center, int radius) {
  const auto d = extract(a, n);
  const Matrix& c = d.component(m);
  const auto& basis = a.space().sector(m);
  std::vector<bool> outside(static_cast<std::size_t>(basis.dim()));
  for (Index i = 0; i < basis.dim(); ++i) {
    bool out = false;
    for (int s : basis.occupied(i)) out = out || std::abs(s - center) > radius;
    outside[static_cast<std::size_t>(i)] = out;
  }
  double mass = 0.0;
  for (Index j = 0; j < c.cols(); ++j) {
    for (Index i = 0; i < c.rows(); ++i) {
      if (outside[static_cast<std::size_t>(i)] || outside[static_cast<std::size_t>(j)]) mass += std::norm(c(i, j));
    }
  }
  return std::sqrt(mass);
}

}  // namespace fermidyn

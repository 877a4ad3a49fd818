#include "fermidyn/sector_algebra.hpp"

#include <cmath>

namespace fermidyn {

const char* to_string(Convention c) { return c == Convention::normalized ? "normalized" : "paper"; }

Convention parse_convention(const std::string& text) {
  if (text == "normalized") return Convention::normalized;
  if (text == "paper") return Convention::paper;
  throw ConfigError("unknown convention '" + text + "'");
}

SectorDecomposition::SectorDecomposition(FockSpacePtr space, int level, Convention convention)
    : space_(std::move(space)), level_(level), convention_(convention) {
  if (level < 0 || level > space_->nmax()) throw LevelError("decomposition level outside the truncation");
  for (int m = 0; m <= level; ++m) components_.push_back(Matrix::Zero(space_->dim(m), space_->dim(m)));
}

const Matrix& SectorDecomposition::component(int m) const {
  if (m < 0 || m > level_) throw LevelError("component index outside [0, level]");
  return components_[static_cast<std::size_t>(m)];
}

void SectorDecomposition::set_component(int m, Matrix c) {
  if (m < 0 || m > level_) throw LevelError("component index outside [0, level]");
  if (c.rows() != space_->dim(m) || c.cols() != space_->dim(m)) {
    throw ShapeError("component " + std::to_string(m) + " does not match the sector dimension");
  }
  components_[static_cast<std::size_t>(m)] = std::move(c);
}

SectorDecomposition SectorDecomposition::converted(Convention target) const {
  if (target == convention_) return *this;
  SectorDecomposition out(space_, level_, target);
  for (int m = 0; m <= level_; ++m) {
    const double c = falling_factorial(level_, m);
    out.components_[static_cast<std::size_t>(m)] =
        target == Convention::paper ? Matrix(component(m) * c) : Matrix(component(m) / c);
  }
  return out;
}

Block realize(const SectorDecomposition& d, int n) {
  if (d.level() != n) throw LevelError("realize needs level " + std::to_string(d.level()) + ", got " + std::to_string(n));
  const auto& space = d.space();
  Block out = Block::zero(space.dim(n), space.dim(n));
  for (int m = 0; m <= n; ++m) {
    const Matrix& c = d.component(m);
    if (c.isZero(0.0)) continue;
    const double weight = d.convention() == Convention::normalized ? falling_factorial(n, m) : 1.0;
    out += embed(space, c, m, n) * Complex(weight);
  }
  return out;
}

SectorDecomposition extract(const FockOperator& a, int n) {
  if (a.grade() != 0) throw ShapeError("extract needs a grade-0 operator");
  SectorDecomposition d(a.space_ptr(), n, Convention::normalized);
  const auto& space = a.space();
  for (int k = 0; k <= n; ++k) {
    Block rest = a.block(k);
    for (int m = 0; m < k; ++m) {
      const Matrix& c = d.component(m);
      if (c.isZero(0.0)) continue;
      rest -= embed(space, c, m, k) * Complex(falling_factorial(k, m));
    }
    d.set_component(k, rest.to_dense() / factorial(k));
  }
  return d;
}

SectorDecomposition kappa(const SectorDecomposition& d) {
  const int n = d.level();
  if (n == 0) throw LevelError("kappa is undefined at level 0");
  SectorDecomposition out(d.space_ptr(), n - 1, d.convention());
  for (int m = 0; m < n; ++m) {
    const double scale = d.convention() == Convention::paper ? static_cast<double>(n - m) / n : 1.0;
    out.set_component(m, d.component(m) * scale);
  }
  return out;
}

double component_distance(const SectorDecomposition& a, const SectorDecomposition& b) {
  if (a.level() != b.level()) throw LevelError("decompositions at different levels");
  const auto bb = b.converted(a.convention());
  double worst = 0.0;
  for (int m = 0; m <= a.level(); ++m) worst = std::max(worst, spectral_norm(a.component(m) - bb.component(m)));
  return worst;
}

// ----------------------------------------------------------------------------

Vector creation_chain(const FockSpace& space, const std::vector<OneBodyVector>& fs) {
  // Builds a*(f_1) ... a*(f_k) Omega one sector at a time without
  // materializing creation operators: coefficient on |S> is det[f_i(s_j)].
  const int k = static_cast<int>(fs.size());
  return wedge_vector(space, fs) * std::sqrt(factorial(k));
}

ClusteringSample clustering_correlator(const OneBodySpace& chain, const FockOperator& a,
                                       const std::vector<OneBodyVector>& fs, const std::vector<OneBodyVector>& gs,
                                       int x) {
  if (chain.boundary() != Boundary::open) throw ConfigError("clustering probes need an open chain");
  if (fs.size() != gs.size() || fs.empty()) throw ShapeError("need matching nonempty f and g lists");
  if (a.grade() != 0) throw ShapeError("clustering correlator needs a grade-0 operator");
  const auto& space = a.space();
  const int n = static_cast<int>(fs.size());

  std::vector<OneBodyVector> fx = fs;
  std::vector<OneBodyVector> gx = gs;
  fx.back() = translate(chain, fs.back(), x);
  gx.back() = translate(chain, gs.back(), x);

  ClusteringSample s;
  s.shift = x;
  const Vector psi = creation_chain(space, fx);
  const Vector phi = creation_chain(space, gx);
  s.lhs = phi.dot(a.block(n).apply(psi));

  const std::vector<OneBodyVector> f_head(fs.begin(), fs.end() - 1);
  const std::vector<OneBodyVector> g_head(gs.begin(), gs.end() - 1);
  const Vector psi0 = creation_chain(space, f_head);
  const Vector phi0 = creation_chain(space, g_head);
  s.rhs = phi0.dot(a.block(n - 1).apply(psi0)) * inner(gs.back(), fs.back());
  s.gap = std::abs(s.lhs - s.rhs);
  return s;
}

// ----------------------------------------------------------------------------

FockOperator alternating_number_products(FockSpacePtr space, int kmax) {
  if (kmax > space->modes()) throw ConfigError("example needs kmax <= modes");
  FockOperator sum(space, 0);
  FockOperator product = FockOperator::identity(space);
  for (int k = 1; k <= kmax; ++k) {
    product = product * number_op(space, OneBodyVector::basis(space->modes(), k - 1));
    sum += product * Complex(k % 2 ? -1.0 : 1.0);
  }
  return sum;
}

SeparationProbe separation_probe(const FockOperator& a, const FockOperator& b, int k) {
  const auto& space = a.space_ptr();
  if (k + 1 > space->nmax() || k + 1 > space->modes()) throw ConfigError("witnesses need k + 1 <= nmax");
  const FockOperator diff = a - b;
  SeparationProbe p;
  Occupation run = (Occupation{1} << k) - 1;
  const auto short_state = FockVector::basis_state(space, run);
  const auto long_state = FockVector::basis_state(space, run | (Occupation{1} << k));
  p.residual_short = diff.apply(short_state).norm();
  p.residual_long = diff.apply(long_state).norm();
  return p;
}

FockOperator random_separation_candidate(FockSpacePtr space, Rng& rng, int k, Complex& b) {
  const int modes = space->modes();
  b = Complex(rng.uniform(-1.5, 0.5), rng.uniform(-0.5, 0.5));
  FockOperator out = FockOperator::scalar(space, b);
  const int terms = rng.integer(1, 4);
  for (int t = 0; t < terms; ++t) {
    const int degree = rng.integer(1, 2);
    FockOperator mono = FockOperator::identity(space);
    for (int d = 0; d < degree; ++d) mono = mono * annihilate(space, OneBodyVector::basis(modes, rng.integer(0, modes - 1)));
    for (int d = 0; d < degree; ++d) mono = mono * create(space, OneBodyVector::basis(modes, rng.integer(0, k - 1)));
    out += mono * rng.complex_normal();
  }
  return out;
}

}  // namespace fermidyn

namespace fermidyn {

FockOperator normal_monomial(FockSpacePtr space, const std::vector<OneBodyVector>& fs,
                             const std::vector<OneBodyVector>& gs) {
  FockOperator out = FockOperator::identity(space);
  for (const auto& f : fs) out = out * create(space, f);
  for (const auto& g : gs) out = out * annihilate(space, g);
  return out;
}

FockOperator random_number_preserving(FockSpacePtr space, Rng& rng, int max_degree, int terms) {
  FockOperator out = FockOperator::scalar(space, rng.complex_normal());
  for (int t = 0; t < terms; ++t) {
    const int degree = rng.integer(1, max_degree);
    std::vector<OneBodyVector> fs;
    std::vector<OneBodyVector> gs;
    for (int d = 0; d < degree; ++d) {
      fs.push_back(rng.one_body(space->modes()));
      gs.push_back(rng.one_body(space->modes()));
    }
    out += normal_monomial(space, fs, gs);
  }
  return out;
}

}  // namespace fermidyn

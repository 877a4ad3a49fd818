#include "fermidyn/fock.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fermidyn {

namespace {

void enumerate_combinations(int modes, int n, std::vector<Occupation>& out) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  if (n == 0) {
    out.push_back(0);
    return;
  }
  while (true) {
    Occupation mask = 0;
    for (int i : idx) mask |= Occupation{1} << i;
    out.push_back(mask);
    int k = n - 1;
    while (k >= 0 && idx[static_cast<std::size_t>(k)] == modes - n + k) --k;
    if (k < 0) break;
    ++idx[static_cast<std::size_t>(k)];
    for (int j = k + 1; j < n; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

std::vector<int> modes_of(Occupation mask) {
  std::vector<int> out;
  while (mask) {
    out.push_back(__builtin_ctzll(mask));
    mask &= mask - 1;
  }
  return out;
}

// Sign of a*(e_{i_1}) ... a*(e_{i_m}) |R> for the increasing modes of `ins`;
// zero when ins and R overlap.
int insertion_sign(Occupation r, Occupation ins) {
  if (r & ins) return 0;
  int sign = 1;
  const auto modes = modes_of(ins);
  for (auto it = modes.rbegin(); it != modes.rend(); ++it) {
    sign *= creation_sign(r, *it);
    r |= Occupation{1} << *it;
  }
  return sign;
}

int permutation_sign(const std::vector<int>& p) {
  int inversions = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) inversions += p[i] > p[j] ? 1 : 0;
  }
  return inversions % 2 ? -1 : 1;
}

}  // namespace

// ----------------------------------------------------------------------------

SectorBasis::SectorBasis(int modes, int n) : modes_(modes), n_(n) {
  if (modes < 1 || modes > 64) throw ConfigError("mode count must lie in [1, 64]");
  if (n < 0 || n > modes) throw ConfigError("particle number must lie in [0, modes]");
  states_.reserve(static_cast<std::size_t>(binomial(modes, n)));
  enumerate_combinations(modes, n, states_);
  index_.reserve(states_.size());
  for (std::size_t i = 0; i < states_.size(); ++i) index_.emplace(states_[i], static_cast<Index>(i));
}

Index SectorBasis::index_of(Occupation mask) const {
  auto it = index_.find(mask);
  return it == index_.end() ? -1 : it->second;
}

std::vector<int> SectorBasis::occupied(Index i) const { return modes_of(state(i)); }

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

double falling_factorial(int n, int m) {
  double r = 1.0;
  for (int i = 0; i < m; ++i) r *= static_cast<double>(n - i);
  return r;
}

double factorial(int n) { return falling_factorial(n, n); }

FockSpace::FockSpace(int modes, int nmax) : modes_(modes), nmax_(nmax) {
  if (nmax < 0 || nmax > modes) throw ConfigError("nmax must lie in [0, modes]");
  sectors_.reserve(static_cast<std::size_t>(nmax) + 1);
  for (int n = 0; n <= nmax; ++n) sectors_.emplace_back(modes, n);
}

const SectorBasis& FockSpace::sector(int n) const {
  if (n < 0 || n > nmax_) throw LevelError("sector " + std::to_string(n) + " outside [0, " + std::to_string(nmax_) + "]");
  return sectors_[static_cast<std::size_t>(n)];
}

FockSpacePtr make_fock_space(int modes, int nmax) { return std::make_shared<const FockSpace>(modes, nmax); }

// ----------------------------------------------------------------------------

FockVector::FockVector(FockSpacePtr space) : space_(std::move(space)) {
  for (int n = 0; n <= space_->nmax(); ++n) sectors_.push_back(Vector::Zero(space_->dim(n)));
}

FockVector FockVector::vacuum(FockSpacePtr space) {
  FockVector v(std::move(space));
  v.sector(0)(0) = 1.0;
  return v;
}

FockVector FockVector::basis_state(FockSpacePtr space, Occupation mask) {
  FockVector v(std::move(space));
  const int n = __builtin_popcountll(mask);
  const Index idx = v.space().sector(n).index_of(mask);
  v.sector(n)(idx) = 1.0;
  return v;
}

double FockVector::norm() const {
  double s = 0.0;
  for (const auto& v : sectors_) s += v.squaredNorm();
  return std::sqrt(s);
}

Complex inner(const FockVector& a, const FockVector& b) {
  if (a.space_ptr() != b.space_ptr()) throw ShapeError("vectors live on different Fock spaces");
  Complex s = 0.0;
  for (int n = 0; n <= a.space().nmax(); ++n) s += a.sector(n).dot(b.sector(n));
  return s;
}

// ----------------------------------------------------------------------------

FockOperator::FockOperator(FockSpacePtr space, int grade)
    : space_(std::move(space)), grade_(grade), blocks_(static_cast<std::size_t>(space_->nmax()) + 1) {}

FockOperator FockOperator::identity(FockSpacePtr space) {
  FockOperator op(space, 0);
  for (int n = 0; n <= space->nmax(); ++n) op.set_block(n, Block::identity(space->dim(n)));
  return op;
}

FockOperator FockOperator::scalar(FockSpacePtr space, Complex value) { return identity(std::move(space)) * value; }

bool FockOperator::in_range(int n) const {
  return n >= 0 && n <= space_->nmax() && n + grade_ >= 0 && n + grade_ <= space_->nmax();
}

bool FockOperator::has_block(int n) const { return in_range(n) && blocks_[static_cast<std::size_t>(n)].has_value(); }

Block FockOperator::block(int n) const {
  if (!in_range(n)) throw LevelError("block out of sector " + std::to_string(n) + " is outside the truncation");
  const auto& b = blocks_[static_cast<std::size_t>(n)];
  if (b) return *b;
  return Block::zero(space_->dim(n + grade_), space_->dim(n));
}

void FockOperator::set_block(int n, Block b) {
  if (!in_range(n)) throw LevelError("block out of sector " + std::to_string(n) + " is outside the truncation");
  if (b.rows() != space_->dim(n + grade_) || b.cols() != space_->dim(n)) {
    throw ShapeError("block shape does not match sector dimensions at n=" + std::to_string(n));
  }
  blocks_[static_cast<std::size_t>(n)] = std::move(b);
}

FockOperator FockOperator::adjoint() const {
  FockOperator out(space_, -grade_);
  for (int n = 0; n <= space_->nmax(); ++n) {
    if (has_block(n)) out.set_block(n + grade_, blocks_[static_cast<std::size_t>(n)]->adjoint());
  }
  return out;
}

FockVector FockOperator::apply(const FockVector& v) const {
  if (v.space_ptr() != space_) throw ShapeError("vector lives on a different Fock space");
  FockVector out(space_);
  for (int n = 0; n <= space_->nmax(); ++n) {
    if (has_block(n)) out.sector(n + grade_) += blocks_[static_cast<std::size_t>(n)]->apply(v.sector(n));
  }
  return out;
}

double FockOperator::seminorm(int n) const {
  if (!has_block(n)) return 0.0;
  return blocks_[static_cast<std::size_t>(n)]->norm();
}

double FockOperator::norm() const {
  double best = 0.0;
  for (int n = 0; n <= space_->nmax(); ++n) best = std::max(best, seminorm(n));
  return best;
}

void FockOperator::require_compatible(const FockOperator& other, const char* op) const {
  if (space_ != other.space_) throw ShapeError(std::string("operators on different Fock spaces in ") + op);
  if (grade_ != other.grade_) throw ShapeError(std::string("grade mismatch in ") + op);
}

FockOperator& FockOperator::operator+=(const FockOperator& other) {
  require_compatible(other, "+=");
  for (int n = 0; n <= space_->nmax(); ++n) {
    if (!other.has_block(n)) continue;
    auto& mine = blocks_[static_cast<std::size_t>(n)];
    if (mine) {
      *mine += *other.blocks_[static_cast<std::size_t>(n)];
    } else {
      mine = *other.blocks_[static_cast<std::size_t>(n)];
    }
  }
  return *this;
}

FockOperator& FockOperator::operator-=(const FockOperator& other) {
  require_compatible(other, "-=");
  for (int n = 0; n <= space_->nmax(); ++n) {
    if (!other.has_block(n)) continue;
    auto& mine = blocks_[static_cast<std::size_t>(n)];
    if (mine) {
      *mine -= *other.blocks_[static_cast<std::size_t>(n)];
    } else {
      mine = *other.blocks_[static_cast<std::size_t>(n)] * Complex(-1.0);
    }
  }
  return *this;
}

FockOperator& FockOperator::operator*=(Complex s) {
  for (auto& b : blocks_) {
    if (b) *b *= s;
  }
  return *this;
}

FockOperator operator*(const FockOperator& a, const FockOperator& b) {
  if (a.space_ != b.space_) throw ShapeError("operators on different Fock spaces in product");
  FockOperator out(a.space_, a.grade_ + b.grade_);
  for (int n = 0; n <= a.space_->nmax(); ++n) {
    if (!b.has_block(n)) continue;
    const int mid = n + b.grade_;
    if (!a.has_block(mid)) continue;
    out.set_block(n, *a.blocks_[static_cast<std::size_t>(mid)] * *b.blocks_[static_cast<std::size_t>(n)]);
  }
  return out;
}

FockOperator commutator(const FockOperator& a, const FockOperator& b) { return a * b - b * a; }
FockOperator anticommutator(const FockOperator& a, const FockOperator& b) { return a * b + b * a; }

// ----------------------------------------------------------------------------

FockOperator create(FockSpacePtr space, const OneBodyVector& f) {
  if (f.size() != space->modes()) throw ShapeError("one-body vector length differs from the mode count");
  FockOperator op(space, 1);
  for (int n = 0; n < space->nmax(); ++n) {
    const auto& src = space->sector(n);
    const auto& dst = space->sector(n + 1);
    std::vector<Triplet> trips;
    for (Index c = 0; c < src.dim(); ++c) {
      const Occupation s = src.state(c);
      for (int i = 0; i < space->modes(); ++i) {
        const Complex fi = f[i];
        if (fi == Complex(0.0) || (s >> i) & 1U) continue;
        const Index r = dst.index_of(s | (Occupation{1} << i));
        trips.emplace_back(r, c, fi * static_cast<double>(creation_sign(s, i)));
      }
    }
    op.set_block(n, Block::from_triplets(dst.dim(), src.dim(), trips));
  }
  return op;
}

FockOperator annihilate(FockSpacePtr space, const OneBodyVector& f) { return create(std::move(space), f).adjoint(); }

FockOperator number_op(FockSpacePtr space, const OneBodyVector& f) {
  return create(space, f) * annihilate(space, f);
}

FockOperator one_body_operator(FockSpacePtr space, const Matrix& k) {
  const int m = space->modes();
  if (k.rows() != m || k.cols() != m) throw ShapeError("one-body matrix must be modes x modes");
  FockOperator op(space, 0);
  for (int n = 0; n <= space->nmax(); ++n) {
    const auto& sec = space->sector(n);
    std::vector<Triplet> trips;
    for (Index c = 0; c < sec.dim(); ++c) {
      const Occupation s = sec.state(c);
      for (int j : modes_of(s)) {
        const Occupation removed = s & ~(Occupation{1} << j);
        const int sj = creation_sign(removed, j);
        for (int i = 0; i < m; ++i) {
          const Complex kij = k(i, j);
          if (kij == Complex(0.0)) continue;
          if (i == j) {
            trips.emplace_back(c, c, kij);
          } else if (!((s >> i) & 1U)) {
            const Index r = sec.index_of(removed | (Occupation{1} << i));
            trips.emplace_back(r, c, kij * static_cast<double>(sj * creation_sign(removed, i)));
          }
        }
      }
    }
    op.set_block(n, Block::from_triplets(sec.dim(), sec.dim(), trips));
  }
  return op;
}

Vector wedge_vector(const FockSpace& space, std::span<const OneBodyVector> fs) {
  const int n = static_cast<int>(fs.size());
  const auto& sec = space.sector(n);
  Vector out = Vector::Zero(sec.dim());
  const double scale = 1.0 / std::sqrt(factorial(n));
  for (Index s = 0; s < sec.dim(); ++s) {
    const auto sites = sec.occupied(s);
    Matrix d(n, n);
    for (int k = 0; k < n; ++k) {
      for (int l = 0; l < n; ++l) d(k, l) = fs[static_cast<std::size_t>(k)][sites[static_cast<std::size_t>(l)]];
    }
    out(s) = n == 0 ? Complex(1.0) : d.determinant() * scale;
  }
  return out;
}

Matrix wedge_operator(const FockSpace& space, std::span<const Matrix> ks) {
  const int n = static_cast<int>(ks.size());
  const auto& sec = space.sector(n);
  for (const auto& k : ks) {
    if (k.rows() != space.modes() || k.cols() != space.modes()) throw ShapeError("wedge factor must be modes x modes");
  }
  Matrix out = Matrix::Zero(sec.dim(), sec.dim());
  if (n == 0) {
    out(0, 0) = 1.0;
    return out;
  }
  std::vector<std::vector<int>> perms;
  std::vector<int> signs;
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  do {
    perms.push_back(p);
    signs.push_back(permutation_sign(p));
  } while (std::next_permutation(p.begin(), p.end()));
  const double scale = 1.0 / factorial(n);
  std::vector<std::vector<int>> occ(static_cast<std::size_t>(sec.dim()));
  for (Index s = 0; s < sec.dim(); ++s) occ[static_cast<std::size_t>(s)] = sec.occupied(s);
  Matrix d(n, n);
  for (Index s = 0; s < sec.dim(); ++s) {
    const auto& ss = occ[static_cast<std::size_t>(s)];
    for (Index t = 0; t < sec.dim(); ++t) {
      const auto& tt = occ[static_cast<std::size_t>(t)];
      Complex acc = 0.0;
      for (std::size_t q = 0; q < perms.size(); ++q) {
        for (int k = 0; k < n; ++k) {
          const int row = ss[static_cast<std::size_t>(perms[q][static_cast<std::size_t>(k)])];
          for (int l = 0; l < n; ++l) d(k, l) = ks[static_cast<std::size_t>(k)](row, tt[static_cast<std::size_t>(l)]);
        }
        acc += static_cast<double>(signs[q]) * d.determinant();
      }
      out(s, t) = acc * scale;
    }
  }
  return out;
}

Block embed(const FockSpace& space, const Matrix& c, int m, int n) {
  if (m > n) throw ShapeError("cannot embed an " + std::to_string(m) + "-particle operator into sector " + std::to_string(n));
  const auto& cm = space.sector(m);
  const auto& cn = space.sector(n);
  if (c.rows() != cm.dim() || c.cols() != cm.dim()) throw ShapeError("component does not match sector " + std::to_string(m));
  if (m == n) return Block(c);

  // Column-wise nonzeros of C, keyed by the mask of the column state.
  std::vector<std::vector<std::pair<Occupation, Complex>>> columns(static_cast<std::size_t>(cm.dim()));
  for (Index j = 0; j < cm.dim(); ++j) {
    for (Index i = 0; i < cm.dim(); ++i) {
      if (c(i, j) != Complex(0.0)) columns[static_cast<std::size_t>(j)].emplace_back(cm.state(i), c(i, j));
    }
  }

  // <S| sum_{I,J} C_IJ A_I A_J^dagger |T> with R = T \ J = S \ I, averaged over
  // the binomial(n, m) ways of choosing the m-particle slot.
  const double scale = 1.0 / binomial(n, m);
  std::vector<Occupation> subsets;
  enumerate_combinations(n, m, subsets);
  std::vector<Triplet> trips;
  for (Index t = 0; t < cn.dim(); ++t) {
    const Occupation tm = cn.state(t);
    const auto tmodes = modes_of(tm);
    for (Occupation pick : subsets) {
      Occupation jmask = 0;
      for (int b = 0; b < n; ++b) {
        if ((pick >> b) & 1U) jmask |= Occupation{1} << tmodes[static_cast<std::size_t>(b)];
      }
      const Occupation r = tm & ~jmask;
      const int sj = insertion_sign(r, jmask);
      const auto& col = columns[static_cast<std::size_t>(cm.index_of(jmask))];
      for (const auto& [imask, value] : col) {
        const int si = insertion_sign(r, imask);
        if (si == 0) continue;
        trips.emplace_back(cn.index_of(r | imask), t, value * static_cast<double>(si * sj) * scale);
      }
    }
  }
  return Block::from_triplets(cn.dim(), cn.dim(), trips);
}

}  // namespace fermidyn

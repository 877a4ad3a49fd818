#include "fermidyn/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace fermidyn {

std::string to_string(Boundary b) { return b == Boundary::open ? "open" : "periodic"; }

Boundary parse_boundary(const std::string& text) {
  if (text == "open") return Boundary::open;
  if (text == "periodic") return Boundary::periodic;
  throw ConfigError("unknown boundary '" + text + "' (expected open|periodic)");
}

OneBodySpace::OneBodySpace(int sites, double spacing, Boundary boundary)
    : sites_(sites), spacing_(spacing), boundary_(boundary) {
  if (sites < 1) throw ConfigError("a chain needs at least one site");
  if (sites < 2 && boundary == Boundary::periodic) throw ConfigError("a ring needs at least 2 sites");
  if (sites > 64) throw ConfigError("at most 64 sites are supported (occupations are 64-bit masks)");
  if (!(spacing > 0.0)) throw ConfigError("lattice spacing must be positive");
}

int OneBodySpace::displacement(int si, int sj) const {
  int k = si - sj;
  if (boundary_ == Boundary::periodic) {
    k %= sites_;
    if (k > sites_ / 2) k -= sites_;
    if (k < -(sites_ - 1) / 2 - (sites_ % 2 == 0 ? 1 : 0)) k += sites_;
  }
  return k;
}

double OneBodySpace::position(int site) const {
  const double center = 0.5 * static_cast<double>(sites_ - 1);
  return (static_cast<double>(site) - center) * spacing_;
}

// ----------------------------------------------------------------------------

PotentialProfile::PotentialProfile(Kind kind, int sites, std::vector<double> values, std::string description)
    : kind_(kind), sites_(sites), values_(std::move(values)), description_(std::move(description)) {}

PotentialProfile PotentialProfile::box(int sites, double amplitude, int radius) {
  if (radius < 0) throw ConfigError("box radius must be nonnegative");
  std::vector<double> v(2 * sites - 1, 0.0);
  for (int k = -(sites - 1); k <= sites - 1; ++k) {
    if (std::abs(k) <= radius) v[k + sites - 1] = amplitude;
  }
  std::ostringstream os;
  os << "box:" << amplitude << "," << radius;
  return {Kind::box, sites, std::move(v), os.str()};
}

PotentialProfile PotentialProfile::gaussian(int sites, double amplitude, double width) {
  if (!(width > 0.0)) throw ConfigError("gaussian width must be positive");
  std::vector<double> v(2 * sites - 1, 0.0);
  for (int k = -(sites - 1); k <= sites - 1; ++k) {
    const double kk = static_cast<double>(k);
    v[k + sites - 1] = amplitude * std::exp(-kk * kk / (2.0 * width * width));
  }
  std::ostringstream os;
  os << "gauss:" << amplitude << "," << width;
  return {Kind::gaussian, sites, std::move(v), os.str()};
}

PotentialProfile PotentialProfile::tabulated(int sites, const std::map<int, double>& values) {
  std::vector<double> v(2 * sites - 1, 0.0);
  std::vector<bool> set(2 * sites - 1, false);
  for (const auto& [k, value] : values) {
    if (std::abs(k) > sites - 1) continue;
    if (!std::isfinite(value)) throw ConfigError("potential values must be finite");
    for (int kk : {k, -k}) {
      const auto idx = static_cast<std::size_t>(kk + sites - 1);
      if (set[idx] && v[idx] != value) {
        throw ConfigError("tabulated potential is not symmetric at k=" + std::to_string(k));
      }
      v[idx] = value;
      set[idx] = true;
    }
  }
  return {Kind::tabulated, sites, std::move(v), "tabulated"};
}

PotentialProfile PotentialProfile::from_file(int sites, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open potential table " + path.string());
  std::map<int, double> values;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    int k = 0;
    double value = 0.0;
    if (!(ls >> k)) continue;
    if (!(ls >> value)) throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected 'k value'");
    if (auto it = values.find(-k); it != values.end() && it->second != value) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": V(k) != V(-k)");
    }
    values[k] = value;
  }
  auto p = tabulated(sites, values);
  p.description_ = "file:" + path.string();
  return p;
}

PotentialProfile PotentialProfile::parse(int sites, const std::string& spec) {
  if (spec.empty() || spec == "none" || spec == "zero") return zero(sites);
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw ConfigError("potential spec '" + spec + "' lacks a kind prefix");
  const std::string kind = spec.substr(0, colon);
  const std::string args = spec.substr(colon + 1);
  if (kind == "file") return from_file(sites, args);
  const auto comma = args.find(',');
  if (comma == std::string::npos) throw ConfigError("potential spec '" + spec + "' needs two parameters");
  double first = 0.0;
  double second = 0.0;
  try {
    first = std::stod(args.substr(0, comma));
    second = std::stod(args.substr(comma + 1));
  } catch (const std::exception&) {
    throw ConfigError("cannot parse potential parameters in '" + spec + "'");
  }
  if (kind == "box") {
    if (second != std::floor(second)) throw ConfigError("box radius must be an integer");
    return box(sites, first, static_cast<int>(second));
  }
  if (kind == "gauss" || kind == "gaussian") return gaussian(sites, first, second);
  throw ConfigError("unknown potential kind '" + kind + "'");
}

double PotentialProfile::operator()(int displacement) const {
  if (std::abs(displacement) > sites_ - 1) return 0.0;
  return values_[static_cast<std::size_t>(displacement + sites_ - 1)];
}

int PotentialProfile::range() const {
  for (int k = sites_ - 1; k >= 0; --k) {
    if ((*this)(k) != 0.0) return k;
  }
  return -1;
}

double PotentialProfile::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double PotentialProfile::min_value() const { return *std::min_element(values_.begin(), values_.end()); }

// ----------------------------------------------------------------------------

OneBodyVector::OneBodyVector(Vector coefficients, std::optional<Support> support)
    : coefficients_(std::move(coefficients)), support_(support) {
  if (support_) {
    const int n = size();
    for (int i = 0; i < n; ++i) {
      if ((i < support_->lo() || i > support_->hi()) && coefficients_(i) != Complex(0.0)) {
        throw ConfigError("coefficient outside the declared support at site " + std::to_string(i));
      }
    }
  }
}

OneBodyVector OneBodyVector::basis(int sites, int site) {
  Vector v = Vector::Zero(sites);
  v(site) = 1.0;
  return OneBodyVector(std::move(v), Support{site, 0});
}

OneBodyVector OneBodyVector::localized(int sites, int center, std::span<const Complex> window) {
  if (window.size() % 2 != 1) throw ConfigError("localized window must have odd length");
  const int radius = static_cast<int>(window.size() / 2);
  if (center - radius < 0 || center + radius >= sites) throw OpenBoundaryClipError("localized window leaves the chain");
  Vector v = Vector::Zero(sites);
  for (int k = -radius; k <= radius; ++k) v(center + k) = window[static_cast<std::size_t>(k + radius)];
  return OneBodyVector(std::move(v), Support{center, radius});
}

std::optional<Support> OneBodyVector::actual_support() const {
  int lo = -1;
  int hi = -1;
  for (int i = 0; i < size(); ++i) {
    if (coefficients_(i) != Complex(0.0)) {
      if (lo < 0) lo = i;
      hi = i;
    }
  }
  if (lo < 0) return std::nullopt;
  // Center rounds down; radius covers the whole interval.
  const int center = (lo + hi) / 2;
  return Support{center, std::max(center - lo, hi - center)};
}

Complex inner(const OneBodyVector& f, const OneBodyVector& g) {
  if (f.size() != g.size()) throw ShapeError("inner product of vectors on different chains");
  return f.coefficients().dot(g.coefficients());
}

RealMatrix kinetic_matrix(const OneBodySpace& space) {
  const int m = space.sites();
  const double inv = 1.0 / (space.spacing() * space.spacing());
  RealMatrix t = RealMatrix::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    t(i, i) += 2.0 * inv;
    for (int step : {-1, 1}) {
      int j = i + step;
      if (space.boundary() == Boundary::periodic) {
        j = (j + m) % m;
      } else if (j < 0 || j >= m) {
        continue;
      }
      t(i, j) -= inv;
    }
  }
  return t;
}

RealMatrix trap_matrix(const OneBodySpace& space, double trap_length) {
  if (!(trap_length > 0.0)) throw ConfigError("trap length L must be positive");
  const int m = space.sites();
  RealMatrix w = RealMatrix::Zero(m, m);
  const double l4 = std::pow(trap_length, 4);
  for (int i = 0; i < m; ++i) {
    const double x = space.position(i);
    w(i, i) = x * x / l4;
  }
  return w;
}

OneBodyVector translate(const OneBodySpace& space, const OneBodyVector& f, int x) {
  const int m = space.sites();
  if (f.size() != m) throw ShapeError("vector does not live on this chain");
  Vector out = Vector::Zero(m);
  std::optional<Support> support = f.support();
  if (space.boundary() == Boundary::periodic) {
    for (int j = 0; j < m; ++j) out(j) = f[((j + x) % m + m) % m];
    if (support) support->center = ((support->center - x) % m + m) % m;
    // A wrapped support is no longer an interval on the chain.
    if (support && (support->lo() < 0 || support->hi() >= m)) support.reset();
    return OneBodyVector(std::move(out), support);
  }
  if (support) {
    const Support moved{support->center - x, support->radius};
    if (moved.lo() < 0 || moved.hi() >= m) {
      throw OpenBoundaryClipError("translation by " + std::to_string(x) + " moves the declared support [" +
                                  std::to_string(support->lo()) + "," + std::to_string(support->hi()) +
                                  "] off the chain");
    }
    support = moved;
  }
  for (int j = 0; j < m; ++j) {
    const int src = j + x;
    if (src >= 0 && src < m) out(j) = f[src];
  }
  return OneBodyVector(std::move(out), support);
}

int support_distance(const Support& a, const Support& b) {
  if (a.hi() < b.lo()) return b.lo() - a.hi();
  if (b.hi() < a.lo()) return a.lo() - b.hi();
  return 0;
}

PairInteraction::PairInteraction(const OneBodySpace& space, PotentialProfile profile)
    : space_(space), profile_(std::move(profile)) {
  if (profile_.sites() != space.sites()) throw ShapeError("potential profile built for a different chain length");
}

double PairInteraction::configuration_energy(std::span<const int> sites) const {
  double e = 0.0;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    for (std::size_t j = i + 1; j < sites.size(); ++j) e += pair(sites[i], sites[j]);
  }
  return 2.0 * e;  // ordered pairs, V symmetric
}

}  // namespace fermidyn

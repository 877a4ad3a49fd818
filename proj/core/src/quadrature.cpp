#include "fermidyn/quadrature.hpp"

#include <cmath>
#include <numbers>

namespace fermidyn {

GaussRule gauss_legendre(int n) {
  if (n < 1) throw ConfigError("Gauss-Legendre rule needs at least one node");
  GaussRule r;
  r.nodes.resize(static_cast<std::size_t>(n));
  r.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged root.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n == 1 ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[static_cast<std::size_t>(i)] = -x;
    r.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    r.weights[static_cast<std::size_t>(i)] = w;
    r.weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  if (n % 2 == 1) r.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return r;
}

GaussRule gauss_legendre(int n, double a, double b) {
  GaussRule r = gauss_legendre(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    r.nodes[i] = mid + half * r.nodes[i];
    r.weights[i] *= half;
  }
  return r;
}

GaussRule composite_gauss_legendre(int n, int panels, double a, double b) {
  if (panels < 1) throw ConfigError("need at least one panel");
  GaussRule out;
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    auto r = gauss_legendre(n, a + p * h, a + (p + 1) * h);
    out.nodes.insert(out.nodes.end(), r.nodes.begin(), r.nodes.end());
    out.weights.insert(out.weights.end(), r.weights.begin(), r.weights.end());
  }
  return out;
}

namespace {

// Barycentric Lagrange basis values at x for the given nodes.
RealVector lagrange_values(const std::vector<double>& nodes, const RealVector& bary, double x) {
  const auto n = static_cast<Index>(nodes.size());
  RealVector out(n);
  for (Index j = 0; j < n; ++j) {
    if (x == nodes[static_cast<std::size_t>(j)]) {
      out.setZero();
      out(j) = 1.0;
      return out;
    }
  }
  double denom = 0.0;
  for (Index j = 0; j < n; ++j) {
    out(j) = bary(j) / (x - nodes[static_cast<std::size_t>(j)]);
    denom += out(j);
  }
  return out / denom;
}

}  // namespace

CollocationRule collocation(int n, double t) {
  CollocationRule c;
  c.rule = gauss_legendre(n, 0.0, t);
  const auto& s = c.rule.nodes;
  RealVector bary(n);
  for (int j = 0; j < n; ++j) {
    double p = 1.0;
    for (int k = 0; k < n; ++k) {
      if (k != j) p *= s[static_cast<std::size_t>(j)] - s[static_cast<std::size_t>(k)];
    }
    bary(j) = 1.0 / p;
  }
  c.forward = RealMatrix::Zero(n, n);
  // Exact for polynomials of degree < n: an n-point rule on [0, s_i] suffices.
  const GaussRule ref = gauss_legendre(n);
  for (int i = 0; i < n; ++i) {
    const double si = s[static_cast<std::size_t>(i)];
    for (int q = 0; q < n; ++q) {
      const double u = 0.5 * si * (1.0 + ref.nodes[static_cast<std::size_t>(q)]);
      const double w = 0.5 * si * ref.weights[static_cast<std::size_t>(q)];
      c.forward.row(i) += w * lagrange_values(s, bary, u).transpose();
    }
  }
  RealVector total(n);
  for (int j = 0; j < n; ++j) total(j) = c.rule.weights[static_cast<std::size_t>(j)];
  c.backward = (-c.forward).rowwise() + total.transpose();
  return c;
}

}  // namespace fermidyn

#pragma once

#include <vector>

#include "fermidyn/types.hpp"

namespace fermidyn {

struct QuadratureSpec {
  int nodes = 16;
  double tolerance = 1e-8;
};

/// Gauss-Legendre rule on [a, b] (b < a allowed; weights then change sign).
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussRule gauss_legendre(int n);
GaussRule gauss_legendre(int n, double a, double b);
/// `panels` equal sub-intervals, n nodes each.
GaussRule composite_gauss_legendre(int n, int panels, double a, double b);

/// Collocation integration matrices on the nodes of gauss_legendre(n, 0, t):
/// forward(i, j)  = integral over [0, s_i] of the j-th Lagrange basis polynomial,
/// backward(i, j) = integral over [s_i, t] of the same polynomial.
struct CollocationRule {
  GaussRule rule;
  RealMatrix forward;
  RealMatrix backward;
};

CollocationRule collocation(int n, double t);

}  // namespace fermidyn

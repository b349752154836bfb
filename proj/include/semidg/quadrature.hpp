#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace semidg {

/// One-dimensional quadrature rule on the reference interval [-1, 1].
struct QuadratureRule {
  Eigen::VectorXd points;
  Eigen::VectorXd weights;

  int size() const { return static_cast<int>(points.size()); }
};

namespace detail {

// Legendre polynomial P_n and derivative P_n' at x via the three-term recurrence.
inline std::pair<double, double> legendre_with_derivative(int n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return {1.0, 0.0};
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  const double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

}  // namespace detail

/// Gauss-Legendre rule with n points; exact for polynomials of degree 2n-1.
inline QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one point");
  QuadratureRule rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = detail::legendre_with_derivative(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const auto [p, dp] = detail::legendre_with_derivative(n, x);
    (void)p;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.points[i] = -x;
    rule.weights[i] = w;
    rule.points[n - 1 - i] = x;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.points[n / 2] = 0.0;
  return rule;
}

/// Gauss-Lobatto node set with n points (n >= 2): endpoints plus roots of P'_{n-1}.
/// For n == 1 returns the midpoint; used as the nodal set of degree-0 elements.
inline Eigen::VectorXd gauss_lobatto_nodes(int n) {
  if (n < 1) throw std::invalid_argument("gauss_lobatto_nodes: need at least one node");
  Eigen::VectorXd nodes(n);
  if (n == 1) {
    nodes[0] = 0.0;
    return nodes;
  }
  nodes[0] = -1.0;
  nodes[n - 1] = 1.0;
  const int m = n - 1;  // interior nodes are roots of P'_m
  for (int i = 1; i < n - 1; ++i) {
    // Chebyshev-like initial guess, then Newton on P'_m using
    // (1-x^2) P_m'' = 2x P_m' - m(m+1) P_m.
    double x = std::cos(M_PI * i / m);
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = detail::legendre_with_derivative(m, x);
      const double ddp = (2.0 * x * dp - m * (m + 1.0) * p) / (1.0 - x * x);
      const double dx = dp / ddp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[n - 1 - i] = x;
  }
  // enforce exact symmetry of the node set
  for (int i = 0; i < n / 2; ++i) nodes[i] = -nodes[n - 1 - i];
  if (n % 2 == 1) nodes[n / 2] = 0.0;
  return nodes;
}

}  // namespace semidg

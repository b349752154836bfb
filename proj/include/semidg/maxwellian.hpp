#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "semidg/mesh.hpp"
#include "semidg/quadrature.hpp"

namespace semidg {

/// Exact one-dimensional root-Maxwellian M^{1/2}(v) = (2 pi theta)^{-1/4} exp(-v^2 / 4 theta).
inline double root_maxwellian(double v, double theta) {
  return std::pow(2.0 * M_PI * theta, -0.25) * std::exp(-v * v / (4.0 * theta));
}

/// Certified piecewise-linear root-Maxwellian on a symmetric velocity mesh.
///
/// Construction: nodal interpolation of the exact root-Maxwellian followed by
/// L2 normalization. The unit mass, endpoint symmetry, and zero first moment
/// then hold by construction; the derivative energy carries an O(h_v) defect
/// that is tracked through the discrete temperature theta_h.
class DiscreteMaxwellian {
 public:
  DiscreteMaxwellian(Mesh1D mesh_v, double theta) : mesh_(std::move(mesh_v)), theta_(theta) {
    if (!(theta > 0.0)) throw std::invalid_argument("DiscreteMaxwellian: theta must be > 0");
    if (mesh_.a() != -mesh_.b() || !mesh_.is_symmetric())
      throw std::invalid_argument(
          "DiscreteMaxwellian: velocity mesh must be symmetric about 0");
    const double L = mesh_.b();
    const double hv = mesh_.h();
    if (!(L >= std::sqrt(theta)))
      throw std::invalid_argument("DiscreteMaxwellian: requires L >= sqrt(theta), got L=" +
                                  std::to_string(L) + " theta=" + std::to_string(theta));
    if (!(hv * hv <= 4.0 / std::sqrt(3.0) * theta))
      throw std::invalid_argument(
          "DiscreteMaxwellian: requires h_v^2 <= (4/sqrt(3)) * theta, got h_v=" +
          std::to_string(hv) + " theta=" + std::to_string(theta));

    const int n = mesh_.n_cells();
    vals_.resize(n + 1);
    for (int i = 0; i <= n; ++i) vals_[i] = root_maxwellian(mesh_.node(i), theta_);
    // mirror so all downstream symmetry identities are exact in floating point
    for (int i = 0; i <= n / 2; ++i) vals_[i] = vals_[n - i];
    const double nrm = std::sqrt(mass_integral());
    for (int i = 0; i <= n; ++i) vals_[i] /= nrm;
    if (!(min_value() > 0.0))
      throw std::invalid_argument("DiscreteMaxwellian: nodal values must be positive");

    mass_ = mass_integral();
    momentum_defect_ = 0.5 * (vals_[n] * vals_[n] - vals_[0] * vals_[0]);
    const double energy = derivative_energy();
    theta_h_ = 0.25 / energy;
    energy_defect_ = energy - 0.25 / theta_;
  }

  const Mesh1D& mesh() const { return mesh_; }
  double theta() const { return theta_; }
  double theta_h() const { return theta_h_; }
  double L() const { return mesh_.b(); }
  double mass() const { return mass_; }
  double momentum_defect() const { return momentum_defect_; }
  double energy_defect() const { return energy_defect_; }
  double node_value(int i) const { return vals_[i]; }

  double min_value() const {
    double m = vals_[0];
    for (double v : vals_) m = std::min(m, v);
    return m;
  }

  /// Piecewise-linear value at v.
  double value(double v) const {
    const int c = mesh_.locate(v);
    return value_on_cell(c, v);
  }

  double value_on_cell(int c, double v) const {
    const double t = (v - mesh_.cell_left(c)) / mesh_.h();
    return vals_[c] * (1.0 - t) + vals_[c + 1] * t;
  }

  /// Cellwise slope d/dv of the piecewise-linear interpolant.
  double slope(int c) const { return (vals_[c + 1] - vals_[c]) / mesh_.h(); }

  /// Discrete velocity v_h = -2 theta M'_h / M_h, evaluated cellwise; bounded
  /// since the nodal values are strictly positive.
  double discrete_velocity_on_cell(int c, double v) const {
    return -2.0 * theta_ * slope(c) / value_on_cell(c, v);
  }

  double discrete_velocity(double v) const {
    if (v < mesh_.a() || v > mesh_.b())
      throw std::domain_error("discrete_velocity: v outside [-L, L]");
    return discrete_velocity_on_cell(mesh_.locate(v), v);
  }

  /// Cellwise maximum of |v_h| (the rational factor 1/M_h is monotone per cell).
  double sup_discrete_velocity() const {
    double m = 0.0;
    for (int c = 0; c < mesh_.n_cells(); ++c) {
      const double denom = std::min(vals_[c], vals_[c + 1]);
      m = std::max(m, 2.0 * theta_ * std::abs(slope(c)) / denom);
    }
    return m;
  }

  /// Exact integral of M_h^2 (piecewise quadratic).
  double mass_integral() const {
    double acc = 0.0;
    for (int c = 0; c < mesh_.n_cells(); ++c) {
      const double y0 = vals_[c], y1 = vals_[c + 1];
      acc += mesh_.h() / 3.0 * (y0 * y0 + y0 * y1 + y1 * y1);
    }
    return acc;
  }

  /// Exact integral of (M_h')^2 (piecewise constant integrand).
  double derivative_energy() const {
    double acc = 0.0;
    for (int c = 0; c < mesh_.n_cells(); ++c) acc += slope(c) * slope(c) * mesh_.h();
    return acc;
  }

  /// Exact integral of v_h^2 M_h^2 = 4 theta^2 (M_h')^2 over cells with +/- v_h sign.
  double half_range_vh_sq() const {
    return 4.0 * theta_ * theta_ * 0.5 * derivative_energy();
  }

 private:
  Mesh1D mesh_;
  double theta_;
  std::vector<double> vals_;
  double theta_h_ = 0.0, mass_ = 0.0, momentum_defect_ = 0.0, energy_defect_ = 0.0;
};

/// Velocity-averaged flux coefficients on interior edges and the outflow boundary.
struct GammaCoefficients {
  double gamma_I;        // (|v_h|/2 M_h, M_h) over [-L, L]
  double gamma_B_plus;   // (v_h M_h, M_h) over {v_h > 0}   (outflow at n = +1)
  double gamma_B_minus;  // -(v_h M_h, M_h) over {v_h < 0}  (outflow at n = -1)
  double gamma_star;     // min of the three
};

/// Exact cellwise evaluation: v_h M_h^2 = -2 theta M_h' M_h is piecewise linear,
/// and v_h has one sign per cell (the sign of -M_h').
inline GammaCoefficients gamma_edges(const DiscreteMaxwellian& M) {
  const Mesh1D& mesh = M.mesh();
  double gI = 0.0, gBp = 0.0, gBm = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const double d = M.slope(c);
    const double cell_int =
        -2.0 * M.theta() * d * 0.5 * mesh.h() * (M.node_value(c) + M.node_value(c + 1));
    // cell_int = int_cell v_h M_h^2 dv; positive where v_h > 0 (d < 0)
    gI += 0.5 * std::abs(cell_int);
    if (d < 0.0) gBp += cell_int;
    if (d > 0.0) gBm += -cell_int;
  }
  GammaCoefficients g{gI, gBp, gBm, std::min(gI, std::min(gBp, gBm))};
  if (!(g.gamma_star > 0.0))
    throw std::runtime_error(
        "gamma_edges: nonpositive flux coefficient; the discrete Maxwellian is degenerate");
  return g;
}

/// Residuals of the four defining properties plus the closed-form interpolation
/// error bounds for the normalized interpolant construction.
struct MaxwellianReport {
  double theta, L, h_v;
  double mass_residual;       // (a)
  double endpoint_residual;   // (b)
  double energy_residual;     // (c), expected O(h_v) nonzero for this construction
  double momentum_residual;   // (d)
  double theta_h;
  double l2_error;            // ||M^{1/2} - M_h^{1/2}||_{L2}, high-order quadrature
  double h1_error;            // ||d/dv (M^{1/2} - M_h^{1/2})||_{L2}
  double l2_bound;            // closed-form certificate for l2_error
  double h1_bound;            // closed-form certificate for h1_error
  double gamma_star;
};

inline double maxwellian_l2_bound(double theta, double hv, double L) {
  const double tail = 1.0 - std::sqrt(std::erf(L / std::sqrt(2.0 * theta)));
  return 2.5 * tail + 5.0 * hv * hv * std::sqrt(3.0) / (8.0 * theta);
}

inline double maxwellian_h1_bound(double theta, double hv, double L) {
  const double tail = 1.0 - std::sqrt(std::erf(L / std::sqrt(2.0 * theta)));
  return 2.5 * tail + 2.5 * hv * hv * std::sqrt(3.0) / (16.0 * std::pow(theta, 1.5)) +
         2.5 * std::sqrt(1.5) * hv / (4.0 * theta);
}

inline MaxwellianReport assumption_report(const DiscreteMaxwellian& M) {
  MaxwellianReport r{};
  r.theta = M.theta();
  r.L = M.L();
  r.h_v = M.mesh().h();
  r.mass_residual = std::abs(M.mass() - 1.0);
  r.endpoint_residual = std::abs(M.node_value(M.mesh().n_cells()) - M.node_value(0));
  r.energy_residual = std::abs(M.energy_defect());
  r.momentum_residual = std::abs(M.momentum_defect());
  r.theta_h = M.theta_h();
  // high-order per-cell quadrature of the smooth error integrands
  const QuadratureRule q = gauss_legendre(20);
  double e0 = 0.0, e1 = 0.0;
  for (int c = 0; c < M.mesh().n_cells(); ++c) {
    const double jac = 0.5 * M.mesh().h();
    for (int p = 0; p < q.size(); ++p) {
      const double v = M.mesh().to_physical(c, q.points[p]);
      const double ex = root_maxwellian(v, M.theta());
      const double dex = -v / (2.0 * M.theta()) * ex;
      const double d0 = ex - M.value_on_cell(c, v);
      const double d1 = dex - M.slope(c);
      e0 += jac * q.weights[p] * d0 * d0;
      e1 += jac * q.weights[p] * d1 * d1;
    }
  }
  r.l2_error = std::sqrt(e0);
  r.h1_error = std::sqrt(e1);
  r.l2_bound = maxwellian_l2_bound(M.theta(), r.h_v, M.L());
  r.h1_bound = maxwellian_h1_bound(M.theta(), r.h_v, M.L());
  r.gamma_star = gamma_edges(M).gamma_star;
  return r;
}

}  // namespace semidg

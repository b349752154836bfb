#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "semidg/assembly.hpp"
#include "semidg/maxwellian.hpp"

namespace semidg {

/// Spatial profile with analytic derivative, used for omega and the spatial
/// part of E so that manufactured forcings stay closed-form.
struct Profile {
  std::string preset;  // "constant" | "linear" | "sinusoid"
  double c0 = 1.0;     // base value
  double c1 = 0.0;     // slope (linear) or amplitude (sinusoid)
  int mode = 1;        // sinusoid mode count on the normalized domain
  double xa = 0.0, xb = 1.0;

  double operator()(double x) const {
    const double xh = (x - xa) / (xb - xa);
    if (preset == "constant") return c0;
    if (preset == "linear") return c0 + c1 * (xh - 0.5);
    if (preset == "sinusoid") return c0 + c1 * std::sin(mode * M_PI * xh);
    throw std::invalid_argument("Profile: unknown preset '" + preset + "'");
  }

  double derivative(double x) const {
    const double xh = (x - xa) / (xb - xa);
    const double s = 1.0 / (xb - xa);
    if (preset == "constant") return 0.0;
    if (preset == "linear") return c1 * s;
    if (preset == "sinusoid") return c1 * mode * M_PI * s * std::cos(mode * M_PI * xh);
    throw std::invalid_argument("Profile: unknown preset '" + preset + "'");
  }

  double sup_abs(int samples = 512) const {
    double m = 0.0;
    for (int i = 0; i <= samples; ++i)
      m = std::max(m, std::abs((*this)(xa + (xb - xa) * i / samples)));
    return m;
  }
};

/// Problem data for the kinetic solver: collision frequency, electric field
/// (separable time dependence), initial density, and lattice temperature.
/// The inflow hook carries the boundary distribution g_-(x, v, t); it defaults
/// to null (zero inflow), and every asserted property requires it to stay zero.
struct ProblemData {
  Profile omega;              // omega(x), must satisfy omega >= omega_min > 0
  Profile E_space;            // spatial part of the field
  std::string E_time = "constant";  // "constant" | "cosine"
  double E_time_freq = 1.0;
  Profile rho0;
  double theta = 1.0;
  std::function<double(double, double, double)> g_inflow;  // (x, v, t) or null

  double E(double x, double t) const { return E_space(x) * E_time_factor(t); }
  double dEdx(double x, double t) const { return E_space.derivative(x) * E_time_factor(t); }

  double E_time_factor(double t) const {
    if (E_time == "constant") return 1.0;
    if (E_time == "cosine") return std::cos(E_time_freq * M_PI * t);
    throw std::invalid_argument("ProblemData: unknown E_time preset '" + E_time + "'");
  }

  bool E_time_dependent() const { return E_time != "constant"; }

  /// |E_time_factor| <= 1 for the presets above, so the space sup bounds E in time.
  double E_sup() const { return E_space.sup_abs(); }

  /// omega_min verified by sampling (quadrature-point scale resolution).
  double omega_min() const {
    double m = omega(omega.xa);
    const int samples = 2048;
    for (int i = 0; i <= samples; ++i) {
      const double x = omega.xa + (omega.xb - omega.xa) * i / samples;
      m = std::min(m, omega(x));
    }
    if (!(m > 0.0))
      throw std::invalid_argument("ProblemData: omega must be bounded below by omega_min > 0");
    return m;
  }
};

/// Sharp trace constant of a broken space: the largest Rayleigh quotient of
/// h (||[[z]]||^2_edges + ||z||^2_boundary) against ||z||^2, from a small dense
/// generalized eigenproblem.
inline double trace_constant(const DGSpace& space) {
  const Eigen::MatrixXd T =
      Eigen::MatrixXd(edge_jump_form(space)) + Eigen::MatrixXd(boundary_form(space, 1.0, 1.0));
  const Eigen::MatrixXd Mm(mass_matrix(space));
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(T, Mm);
  return space.mesh().h() * eig.eigenvalues().maxCoeff();
}

/// Stability constants of the energy estimate and the collision-dominance
/// threshold eps_{h_v} = omega_min h_v / (4 C1 h_v + 2 C2).
struct StabilityConstants {
  double C1, C2, C3, C_T;
  double eps_threshold;
};

inline StabilityConstants stability_constants(const ProblemData& data,
                                              const DiscreteMaxwellian& M,
                                              double trace_const_v) {
  StabilityConstants s{};
  const double Esup = data.E_sup();
  s.C1 = Esup * M.sup_discrete_velocity() / (2.0 * data.theta);
  s.C_T = trace_const_v;
  s.C2 = s.C_T * Esup;
  s.C3 = 1.5 / data.theta * Esup;
  const double hv = M.mesh().h();
  const double wmin = data.omega_min();
  const double denom = 4.0 * s.C1 * hv + 2.0 * s.C2;
  s.eps_threshold = denom > 0.0 ? wmin * hv / denom
                                : std::numeric_limits<double>::infinity();
  return s;
}

}  // namespace semidg

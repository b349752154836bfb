#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "semidg/norms.hpp"
#include "semidg/problem.hpp"
#include "semidg/projection.hpp"

namespace semidg {

/// Temperature entering the limiting first-order system.
///
/// lattice:  diffusion theta, unit drift (the system as posed).
/// discrete: diffusion theta_h, unit drift.
/// kinetic_matched: diffusion theta^2/theta_h and drift theta/theta_h — the
///   coefficients the kinetic scheme actually relaxes to when the derivative
///   energy of the interpolated Maxwellian is not exactly 1/(4 theta).
enum class TemperatureMode { lattice, discrete, kinetic_matched };

struct DDCoefficients {
  double diffusion;
  double drift_factor;
};

inline DDCoefficients dd_coefficients(TemperatureMode mode, double theta, double theta_h) {
  switch (mode) {
    case TemperatureMode::lattice: return {theta, 1.0};
    case TemperatureMode::discrete: return {theta_h, 1.0};
    case TemperatureMode::kinetic_matched:
      return {theta * theta / theta_h, theta / theta_h};
  }
  throw std::invalid_argument("dd_coefficients: bad mode");
}

using SpaceTimeFn = std::function<double(double, double)>;

/// Assembled first-order system: density in S^0 (beta=0) or V^0 (beta=1) and
/// current in the full broken space, with the current eliminable cellwise.
class DDOperators {
 public:
  DDOperators(const Mesh1D& mesh_x, int kx, const ProblemData& data, double gamma_I,
              int beta, DDCoefficients coef)
      : X_(mesh_x, kx, density_continuity(kx, beta)),
        Js_(mesh_x, kx, Continuity::broken),
        data_(data),
        beta_(beta),
        gamma_I_(gamma_I),
        coef_(coef) {
    if (!(gamma_I > 0.0))
      throw std::invalid_argument("DDOperators: missing or nonpositive gamma_I coefficient");
    build();
  }

  static Continuity density_continuity(int kx, int beta) {
    if (beta != 0 && beta != 1) throw std::invalid_argument("DDOperators: beta must be 0 or 1");
    if (beta == 0 && kx < 1)
      throw std::invalid_argument(
          "DDOperators: k_x = 0 with beta = 0 locks (no continuous limit space)");
    return beta == 0 ? Continuity::continuous_zero_trace : Continuity::broken_zero_trace;
  }

  const DGSpace& X() const { return X_; }
  const DGSpace& Jspace() const { return Js_; }
  int beta() const { return beta_; }
  const DDCoefficients& coefficients() const { return coef_; }
  const ProblemData& data() const { return data_; }

  const SparseMat& Mrho() const { return Mrho_; }
  const SparseMat& Momega() const { return Momega_; }
  const SparseMat& Momega_inv() const { return Momega_inv_; }
  const SparseMat& Grad() const { return G_; }
  const SparseMat& Drift_space() const { return BE_; }
  const SparseMat& Div() const { return D_; }
  const SparseMat& JumpPenalty() const { return Gamma_; }

  /// J = Momega^{-1} (drift(t) - Grad) rho.
  Eigen::VectorXd reconstruct_current(const Eigen::VectorXd& rho, double t) const {
    const double f = coef_.drift_factor * data_.E_time_factor(t);
    return Momega_inv_ * (f * (BE_ * rho) - G_ * rho);
  }

  SparseMat reduced_system(double dt, double t) const {
    const double f = coef_.drift_factor * data_.E_time_factor(t);
    SparseMat S = (1.0 / dt) * Mrho_ + Gamma_;
    const SparseMat K = D_ * Momega_inv_ * (f * BE_ - G_);
    return SparseMat(S + K);
  }

  Eigen::VectorXd forcing_load(const SpaceTimeFn& f, double t) const {
    return load_vector(X_, [&](double x) { return f(x, t); }, X_.degree() + 4);
  }

  /// Initial condition: L2 projection of rho_{0,h} (itself the projection of
  /// rho_0 onto the broken space) onto the space carrying the density.
  Eigen::VectorXd initial_density() const {
    const SpatialField rho0_broken =
        l2_project([&](double x) { return data_.rho0(x); }, Js_, Js_.degree() + 6);
    return l2_project(rho0_broken, X_).coeffs;
  }

 private:
  void build() {
    Mrho_ = mass_matrix(X_);
    Momega_ = mass_matrix(Js_, [this](double x) { return data_.omega(x); },
                          Js_.degree() + 12);
    BE_ = coefficientless_drift();
    G_ = gradient_form();
    D_ = divergence_form();
    Gamma_ = jump_penalty();
    Momega_inv_ = block_inverse(Momega_, Js_.local_size());
  }

  SparseMat coefficientless_drift() const {
    return mass_matrix(Js_, X_, [this](double x) { return data_.E_space(x); },
                       Js_.degree() + 12);
  }

  // theta_d [ (rho', tau) - <[[rho]], {{tau}}> ], rows in J-space, cols in X.
  SparseMat gradient_form() const {
    SparseMat G = SparseMat(convection_matrix(X_, Js_).transpose());
    std::vector<Triplet> trips;
    for (int e = 0; e < X_.mesh().n_interior_edges(); ++e)
      add_edge_jump_avg(trips, Js_, X_, e, -1.0);
    G += from_triplets(Js_.dof_count(), X_.dof_count(), trips);
    return SparseMat(coef_.diffusion * G);
  }

  // -(J, q') + <{{J}}, [[q]]>, rows in X, cols in J-space.
  SparseMat divergence_form() const {
    SparseMat D = SparseMat(-1.0 * convection_matrix(X_, Js_));
    std::vector<Triplet> trips;
    for (int e = 0; e < X_.mesh().n_interior_edges(); ++e)
      add_edge_avg_jump(trips, X_, Js_, e, 1.0);
    D += from_triplets(X_.dof_count(), Js_.dof_count(), trips);
    return D;
  }

  SparseMat jump_penalty() const {
    std::vector<Triplet> trips;
    for (int e = 0; e < X_.mesh().n_interior_edges(); ++e)
      add_edge_jump_jump(trips, X_, X_, e, gamma_I_);
    return from_triplets(X_.dof_count(), X_.dof_count(), trips);
  }

  static SparseMat block_inverse(const SparseMat& M, int blk) {
    // the broken mass matrix is block diagonal with one block per cell
    Eigen::MatrixXd dense(M);
    std::vector<Triplet> trips;
    for (int pos = 0; pos < dense.rows(); pos += blk) {
      const Eigen::MatrixXd inv = dense.block(pos, pos, blk, blk).inverse();
      for (int i = 0; i < blk; ++i)
        for (int j = 0; j < blk; ++j) trips.emplace_back(pos + i, pos + j, inv(i, j));
    }
    return from_triplets(static_cast<int>(dense.rows()), static_cast<int>(dense.cols()),
                         trips);
  }

  DGSpace X_, Js_;
  ProblemData data_;
  int beta_;
  double gamma_I_;
  DDCoefficients coef_;
  SparseMat Mrho_, Momega_, Momega_inv_, G_, BE_, D_, Gamma_;
};

struct DDState {
  Eigen::VectorXd rho;
  Eigen::VectorXd J;
  double t = 0.0;
};

/// Backward-Euler step on the density with cellwise-eliminated current.
class DDStepper {
 public:
  DDStepper(const DDOperators& ops, const SpaceTimeFn& forcing = nullptr)
      : ops_(&ops), forcing_(forcing) {}

  DDState step(const DDState& state, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("step_dd: dt must be > 0");
    const double t_new = state.t + dt;
    const double f = ops_->data().E_time_factor(t_new);
    if (!factorized_ || dt != dt_cached_ || f != factor_cached_) {
      S_cached_ = ops_->reduced_system(dt, t_new);
      solver_.compute(S_cached_);
      if (solver_.info() != Eigen::Success)
        throw std::runtime_error("step_dd: reduced system factorization failed");
      dt_cached_ = dt;
      factor_cached_ = f;
      factorized_ = true;
    }
    Eigen::VectorXd rhs = (1.0 / dt) * (ops_->Mrho() * state.rho);
    if (forcing_) rhs += ops_->forcing_load(forcing_, t_new);
    DDState out;
    out.rho = solver_.solve(rhs);
    const double rn = (S_cached_ * out.rho - rhs).norm();
    if (rn / std::max(rhs.norm(), 1e-300) > 1e-10)
      throw std::runtime_error("step_dd: linear solve exceeded residual tolerance");
    out.J = ops_->reconstruct_current(out.rho, t_new);
    out.t = t_new;
    return out;
  }

 private:
  const DDOperators* ops_;
  SpaceTimeFn forcing_;
  Eigen::SparseLU<SparseMat> solver_;
  SparseMat S_cached_;
  double dt_cached_ = -1.0, factor_cached_ = 0.0;
  bool factorized_ = false;
};

/// One coupled block solve of the same step, used to confirm the elimination.
inline DDState step_dd_coupled(const DDOperators& ops, const DDState& state, double dt,
                               const SpaceTimeFn& forcing = nullptr) {
  const double t_new = state.t + dt;
  const double f = ops.coefficients().drift_factor * ops.data().E_time_factor(t_new);
  const int nr = ops.X().dof_count(), nj = ops.Jspace().dof_count();
  std::vector<Triplet> trips;
  auto add_block = [&](int r0, int c0, const SparseMat& M, double s) {
    for (int o = 0; o < M.outerSize(); ++o)
      for (SparseMat::InnerIterator it(M, o); it; ++it)
        trips.emplace_back(r0 + static_cast<int>(it.row()), c0 + static_cast<int>(it.col()),
                           s * it.value());
  };
  add_block(0, 0, ops.Mrho(), 1.0 / dt);
  add_block(0, 0, ops.JumpPenalty(), 1.0);
  add_block(0, nr, ops.Div(), 1.0);
  add_block(nr, 0, ops.Grad(), 1.0);
  add_block(nr, 0, ops.Drift_space(), -f);
  add_block(nr, nr, ops.Momega(), 1.0);
  SparseMat S(nr + nj, nr + nj);
  S.setFromTriplets(trips.begin(), trips.end());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nr + nj);
  rhs.head(nr) = (1.0 / dt) * (ops.Mrho() * state.rho);
  if (forcing) rhs.head(nr) += ops.forcing_load(forcing, t_new);
  Eigen::SparseLU<SparseMat> solver(S);
  const Eigen::VectorXd sol = solver.solve(rhs);
  DDState out;
  out.rho = sol.head(nr);
  out.J = sol.tail(nj);
  out.t = t_new;
  return out;
}

/// Exact reference solution with analytically computed compatible forcing.
struct ManufacturedReference {
  SpaceTimeFn rho;
  SpaceTimeFn J;
  SpaceTimeFn forcing;
};

/// rho(x, t) = exp(-lambda t) sin(m pi x_hat) on the normalized domain, with
/// J = (-theta_d rho' + alpha E rho) / omega and the forcing that makes the
/// pair solve the forced first-order system exactly.
inline ManufacturedReference manufactured_reference(const ProblemData& data,
                                                    DDCoefficients coef, double lambda,
                                                    int mode) {
  if (data.E_time_dependent())
    throw std::invalid_argument("manufactured_reference: requires a static field preset");
  const double xa = data.rho0.xa, xb = data.rho0.xb;
  const double k = mode * M_PI / (xb - xa);
  const double th = coef.diffusion, al = coef.drift_factor;
  auto rho = [=](double x, double t) {
    return std::exp(-lambda * t) * std::sin(k * (x - xa));
  };
  auto drho = [=](double x, double t) {
    return std::exp(-lambda * t) * k * std::cos(k * (x - xa));
  };
  auto ddrho = [=](double x, double t) { return -k * k * rho(x, t); };
  ManufacturedReference ref;
  const Profile om = data.omega;
  const Profile Es = data.E_space;
  ref.rho = rho;
  ref.J = [=](double x, double t) {
    return (-th * drho(x, t) + al * Es(x) * rho(x, t)) / om(x);
  };
  ref.forcing = [=](double x, double t) {
    const double w = om(x), dw = om.derivative(x);
    const double E = Es(x), dE = Es.derivative(x);
    const double num = -th * ddrho(x, t) + al * (dE * rho(x, t) + E * drho(x, t));
    const double Jv = -th * drho(x, t) + al * E * rho(x, t);
    const double dJ = (num * w - Jv * dw) / (w * w);
    return -lambda * rho(x, t) + dJ;
  };
  return ref;
}

struct DDTrajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> rho;
  std::vector<Eigen::VectorXd> J;
  double sup_rho_norm = 0.0;
  double final_rho_norm = 0.0;
  double J_L2T_sq = 0.0;
  double rho_err_L2T = 0.0;  // against a reference, when provided
  double J_err_L2T = 0.0;
  double rho0_norm = 0.0;
  DDState final_state;
};

inline DDTrajectory run_dd(const DDOperators& ops, const Eigen::VectorXd& rho0, double dt,
                           double T, const SpaceTimeFn& forcing = nullptr,
                           const ManufacturedReference* ref = nullptr) {
  DDStepper stepper(ops, forcing);
  DDState s;
  s.rho = rho0;
  s.J = ops.reconstruct_current(rho0, 0.0);
  s.t = 0.0;

  DDTrajectory tr;
  const SpatialField r0(ops.X(), rho0);
  tr.rho0_norm = l2_norm(r0);
  tr.sup_rho_norm = tr.rho0_norm;
  tr.times.push_back(0.0);
  tr.rho.push_back(s.rho);
  tr.J.push_back(s.J);
  double err_r = 0.0, err_j = 0.0;
  const int n_steps = static_cast<int>(std::llround(T / dt));
  for (int n = 0; n < n_steps; ++n) {
    s = stepper.step(s, dt);
    const SpatialField rf(ops.X(), s.rho);
    const SpatialField jf(ops.Jspace(), s.J);
    tr.sup_rho_norm = std::max(tr.sup_rho_norm, l2_norm(rf));
    tr.J_L2T_sq += dt * std::pow(l2_norm(jf), 2);
    if (ref) {
      const double t = s.t;
      err_r += dt * std::pow(l2_error(rf, [&](double x) { return ref->rho(x, t); }), 2);
      err_j += dt * std::pow(l2_error(jf, [&](double x) { return ref->J(x, t); }), 2);
    }
    tr.times.push_back(s.t);
    tr.rho.push_back(s.rho);
    tr.J.push_back(s.J);
  }
  tr.rho_err_L2T = std::sqrt(err_r);
  tr.J_err_L2T = std::sqrt(err_j);
  tr.final_rho_norm = l2_norm(SpatialField(ops.X(), s.rho));
  tr.final_state = s;
  return tr;
}

}  // namespace semidg

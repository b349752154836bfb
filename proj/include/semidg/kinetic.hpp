#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "semidg/norms.hpp"
#include "semidg/problem.hpp"
#include "semidg/projection.hpp"

namespace semidg {

/// Tensor-product phase space V_h = V_{x,h} (x) V_{v,h}, both broken.
/// Global dof ordering: x-cell major, then v-cell, then the tensor nodal index
/// (x-local fast over v-local):
///   index = ((cx * nv + cv) * (kx+1) + ix) * (kv+1) + jv.
struct PhaseSpace {
  DGSpace Vx;
  DGSpace Vv;

  PhaseSpace(const Mesh1D& mesh_x, int kx, const Mesh1D& mesh_v, int kv)
      : Vx(mesh_x, kx, Continuity::broken), Vv(mesh_v, kv, Continuity::broken) {
    if (kv < 1)
      throw std::invalid_argument("PhaseSpace: k_v >= 1 is required by the Maxwellian");
  }

  int dimx() const { return Vx.dof_count(); }
  int dimv() const { return Vv.dof_count(); }
  int dim() const { return dimx() * dimv(); }

  int index(int gx, int gv) const {
    const int lx = Vx.local_size(), lv = Vv.local_size();
    const int cx = gx / lx, ix = gx % lx;
    const int cv = gv / lv, jv = gv % lv;
    return ((cx * Vv.mesh().n_cells() + cv) * lx + ix) * lv + jv;
  }
};

/// State of the weighted distribution at one time level.
struct KineticState {
  Eigen::VectorXd g;
  double eps = 1.0;
  int beta = 0;
  double t = 0.0;
};

namespace detail {

/// Per-cell velocity matrices weighted by the rational discrete velocity v_h.
/// v_h has one sign per cell (the sign of -M_h'), so the signed/absolute/
/// half-range variants are exact rearrangements of the same per-cell blocks.
struct VelocityFactors {
  Eigen::MatrixXd Gv, Gv_pos, Gv_neg, Gv_abs;
};

inline VelocityFactors velocity_weighted_factors(const DGSpace& Vv,
                                                 const DiscreteMaxwellian& M) {
  const int dim = Vv.dof_count(), nl = Vv.local_size();
  VelocityFactors f;
  f.Gv.setZero(dim, dim);
  f.Gv_pos.setZero(dim, dim);
  f.Gv_neg.setZero(dim, dim);
  const QuadratureRule q = gauss_legendre(24);  // rational integrand, smooth per cell
  const Mesh1D& mesh = Vv.mesh();
  Eigen::MatrixXd block(nl, nl);
  for (int c = 0; c < mesh.n_cells(); ++c) {
    block.setZero();
    const double jac = 0.5 * mesh.h();
    for (int p = 0; p < q.size(); ++p) {
      const double v = mesh.to_physical(c, q.points[p]);
      const double w = jac * q.weights[p] * M.discrete_velocity_on_cell(c, v);
      for (int i = 0; i < nl; ++i)
        for (int j = 0; j < nl; ++j)
          block(i, j) += w * Vv.basis().value(i, q.points[p]) *
                         Vv.basis().value(j, q.points[p]);
    }
    const double d = M.slope(c);
    for (int i = 0; i < nl; ++i) {
      const int gi = Vv.cell_dof(c, i);
      for (int j = 0; j < nl; ++j) {
        const int gj = Vv.cell_dof(c, j);
        f.Gv(gi, gj) += block(i, j);
        if (d < 0.0) f.Gv_pos(gi, gj) += block(i, j);   // v_h > 0 on this cell
        if (d > 0.0) f.Gv_neg(gi, gj) -= block(i, j);   // v_h < 0 on this cell
      }
    }
  }
  f.Gv_abs = f.Gv_pos + f.Gv_neg;
  return f;
}

inline void add_kron(std::vector<Triplet>& trips, const PhaseSpace& ps,
                     const SparseMat& X, const Eigen::MatrixXd& V, double scale) {
  for (int ox = 0; ox < X.outerSize(); ++ox)
    for (SparseMat::InnerIterator it(X, ox); it; ++it) {
      const double xv = scale * it.value();
      if (xv == 0.0) continue;
      for (int i = 0; i < V.rows(); ++i)
        for (int j = 0; j < V.cols(); ++j) {
          if (V(i, j) == 0.0) continue;
          trips.emplace_back(ps.index(static_cast<int>(it.row()), i),
                             ps.index(static_cast<int>(it.col()), j), xv * V(i, j));
        }
    }
}

}  // namespace detail

/// Assembled forms of the weighted kinetic problem, plus the factor data the
/// moment and residual evaluations reuse.
class KineticOperators {
 public:
  KineticOperators(const PhaseSpace& ps, const DiscreteMaxwellian& M,
                   const ProblemData& data, int beta, double eps)
      : ps_(ps), M_(M), data_(data), beta_(beta), eps_(eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("KineticOperators: eps must be > 0");
    if (beta != 0 && beta != 1)
      throw std::invalid_argument("KineticOperators: beta must be 0 or 1");
    if (ps.Vv.mesh().b() != M.mesh().b() || ps.Vv.mesh().n_cells() != M.mesh().n_cells())
      throw std::invalid_argument("KineticOperators: velocity space/Maxwellian mismatch");
    build();
  }

  const PhaseSpace& phase_space() const { return ps_; }
  const DiscreteMaxwellian& maxwellian() const { return M_; }
  const ProblemData& data() const { return data_; }
  int beta() const { return beta_; }
  double eps() const { return eps_; }
  double theta() const { return data_.theta; }
  double theta_hat() const { return theta_hat_; }
  const GammaCoefficients& gammas() const { return gammas_; }
  const StabilityConstants& constants() const { return stab_; }

  const SparseMat& Mass() const { return Mass_; }
  const SparseMat& A_core() const { return A_core_; }
  const SparseMat& A_penalty() const { return A_penalty_; }
  SparseMat A() const { return A_core_ + std::pow(eps_, beta_) * A_penalty_; }
  const SparseMat& B() const { return B_; }
  const SparseMat& D() const { return D_; }
  const SparseMat& C() const { return C_; }
  const SparseMat& Q() const { return Q_; }
  /// Quadratic forms of the energy estimate: <|v_h . n| [[g]],[[g]]> on the
  /// interior skeleton and the same weight on the spatial boundary.
  const SparseMat& jump_form() const { return Fjump_; }
  const SparseMat& boundary_form_x() const { return Fbound_; }

  const Eigen::VectorXd& moment_weights() const { return W_; }    // (M_h, psi_j)
  const Eigen::VectorXd& current_weights() const { return U_; }   // (v_h M_h, psi_j)
  const Eigen::VectorXd& maxwellian_coeffs() const { return m_; }
  const Eigen::VectorXd& velocity_maxwellian_coeffs() const { return u_; }

  const SparseMat& Mx() const { return Mx_; }
  const SparseMat& omega_x() const { return omx_; }
  SparseMat Ex(double t) const { return data_.E_time_factor(t) * Ex_space_; }

  /// Full operator of the implicit update at time t:
  ///   (eps/dt) Mass + A + B(t) + D(t) - C(t) - (1/eps) Q.
  SparseMat system_matrix(double dt, double t) const {
    const double f = data_.E_time_factor(t);
    SparseMat S = (eps_ / dt) * Mass_;
    S += A_core_ + std::pow(eps_, beta_) * A_penalty_;
    S += f * B_signed_ + std::abs(f) * B_abs_;
    S += f * D_;
    S -= f * C_;
    S -= (1.0 / eps_) * Q_;
    return S;
  }

  /// Form value z^T Op w for the E-scaled operators at time t.
  double form_B(const Eigen::VectorXd& w, const Eigen::VectorXd& z, double t) const {
    const double f = data_.E_time_factor(t);
    return f * z.dot(B_signed_ * w) + std::abs(f) * z.dot(B_abs_ * w);
  }
  double form_D(const Eigen::VectorXd& w, const Eigen::VectorXd& z, double t) const {
    return data_.E_time_factor(t) * z.dot(D_ * w);
  }
  double form_C(const Eigen::VectorXd& w, const Eigen::VectorXd& z, double t) const {
    return data_.E_time_factor(t) * z.dot(C_ * w);
  }
  double form_A(const Eigen::VectorXd& w, const Eigen::VectorXd& z) const {
    return z.dot(A_core_ * w) + std::pow(eps_, beta_) * z.dot(A_penalty_ * w);
  }
  double form_Q(const Eigen::VectorXd& w, const Eigen::VectorXd& z) const {
    return z.dot(Q_ * w);
  }

  /// Inflow functional R(z) = -<v_h g_-, n_x z> over the inflow boundary,
  /// with g_- interpolated at the velocity nodes. Zero when no inflow data is
  /// set (the default, and a precondition of every asserted property).
  Eigen::VectorXd inflow_load(double t) const {
    Eigen::VectorXd load = Eigen::VectorXd::Zero(ps_.dim());
    if (!data_.g_inflow) return load;
    const DGSpace& Vv = ps_.Vv;
    const int da = boundary_dof_a(ps_.Vx);
    const int db = boundary_dof_b(ps_.Vx);
    Eigen::VectorXd ga(ps_.dimv()), gb(ps_.dimv());
    for (int c = 0; c < Vv.mesh().n_cells(); ++c)
      for (int j = 0; j < Vv.local_size(); ++j) {
        const double v = Vv.node_coord(c, j);
        ga[Vv.cell_dof(c, j)] = data_.g_inflow(ps_.Vx.mesh().a(), v, t);
        gb[Vv.cell_dof(c, j)] = data_.g_inflow(ps_.Vx.mesh().b(), v, t);
      }
    // at x = a the inflow set is {v_h > 0}; at x = b it is {v_h < 0}
    const Eigen::VectorXd la = vf_.Gv_pos * ga;
    const Eigen::VectorXd lb = vf_.Gv_neg * gb;
    for (int gv = 0; gv < ps_.dimv(); ++gv) {
      load[ps_.index(da, gv)] += la[gv];
      load[ps_.index(db, gv)] += lb[gv];
    }
    return load;
  }

  /// Coefficient vector of the isotropic state M_h rho in V_h.
  Eigen::VectorXd isotropic(const Eigen::VectorXd& rho_x) const {
    Eigen::VectorXd g(ps_.dim());
    for (int gx = 0; gx < ps_.dimx(); ++gx)
      for (int gv = 0; gv < ps_.dimv(); ++gv) g[ps_.index(gx, gv)] = rho_x[gx] * m_[gv];
    return g;
  }

  /// Density rho = (M_h, g)_v as a field in V_x; nodal extraction, no solve.
  Eigen::VectorXd density(const Eigen::VectorXd& g) const {
    Eigen::VectorXd rho = Eigen::VectorXd::Zero(ps_.dimx());
    for (int gx = 0; gx < ps_.dimx(); ++gx)
      for (int gv = 0; gv < ps_.dimv(); ++gv) rho[gx] += W_[gv] * g[ps_.index(gx, gv)];
    return rho;
  }

  /// Current J = (1/eps) (v_h M_h, g)_v.
  Eigen::VectorXd current(const Eigen::VectorXd& g) const {
    Eigen::VectorXd J = Eigen::VectorXd::Zero(ps_.dimx());
    for (int gx = 0; gx < ps_.dimx(); ++gx)
      for (int gv = 0; gv < ps_.dimv(); ++gv) J[gx] += U_[gv] * g[ps_.index(gx, gv)];
    return J / eps_;
  }

  /// Equivalent current route J = -(2 theta / eps)(M_h', g - M_h rho)_v.
  Eigen::VectorXd current_fluctuation_route(const Eigen::VectorXd& g) const {
    const Eigen::VectorXd gt = g - isotropic(density(g));
    Eigen::VectorXd J = Eigen::VectorXd::Zero(ps_.dimx());
    for (int gx = 0; gx < ps_.dimx(); ++gx)
      for (int gv = 0; gv < ps_.dimv(); ++gv) J[gx] += U_[gv] * gt[ps_.index(gx, gv)];
    return J / eps_;
  }

  double l2_norm_phase(const Eigen::VectorXd& g) const {
    return std::sqrt(std::max(0.0, g.dot(Mass_ * g)));
  }

  /// x-trace slices of a phase-space vector (per velocity dof).
  Eigen::VectorXd slice_x_dof(const Eigen::VectorXd& g, int gx) const {
    Eigen::VectorXd s(ps_.dimv());
    for (int gv = 0; gv < ps_.dimv(); ++gv) s[gv] = g[ps_.index(gx, gv)];
    return s;
  }

  const detail::VelocityFactors& velocity_factors() const { return vf_; }

 private:
  void build() {
    const DGSpace& Vx = ps_.Vx;
    const DGSpace& Vv = ps_.Vv;
    const Mesh1D& mx = Vx.mesh();

    // velocity factor data
    vf_ = detail::velocity_weighted_factors(Vv, M_);
    Mv_ = Eigen::MatrixXd(mass_matrix(Vv));
    Kv_conv_ = Eigen::MatrixXd(convection_matrix(Vv, Vv));
    m_.resize(ps_.dimv());
    u_.resize(ps_.dimv());
    for (int c = 0; c < Vv.mesh().n_cells(); ++c)
      for (int j = 0; j < Vv.local_size(); ++j) {
        const int g = Vv.cell_dof(c, j);
        m_[g] = M_.value_on_cell(c, Vv.node_coord(c, j));
        u_[g] = -2.0 * data_.theta * M_.slope(c);
      }
    W_ = Mv_ * m_;
    U_ = Mv_ * u_;
    theta_hat_ = u_.dot(Mv_ * u_);

    // x factor matrices
    Mx_ = mass_matrix(Vx);
    Kx_conv_ = convection_matrix(Vx, Vx);
    omx_ = mass_matrix(Vx, [this](double x) { return data_.omega(x); },
                       Vx.degree() + 12);
    Ex_space_ = mass_matrix(Vx, [this](double x) { return data_.E_space(x); },
                            Vx.degree() + 12);
    Ex_abs_space_ = mass_matrix(Vx, [this](double x) { return std::abs(data_.E_space(x)); },
                                Vx.degree() + 12);

    std::vector<Triplet> xaj, xjj;
    for (int e = 0; e < mx.n_interior_edges(); ++e) {
      add_edge_avg_jump(xaj, Vx, Vx, e, 1.0);
      add_edge_jump_jump(xjj, Vx, Vx, e, 1.0);
    }
    Xaj_ = from_triplets(ps_.dimx(), ps_.dimx(), xaj);
    Xjj_ = from_triplets(ps_.dimx(), ps_.dimx(), xjj);
    Xa_ = boundary_form(Vx, 1.0, 0.0);
    Xb_ = boundary_form(Vx, 0.0, 1.0);

    // A = -(v_h w, dz/dx) + <v_h {{w}} , [[z]]> + outflow, plus the eps^beta penalty
    {
      std::vector<Triplet> trips;
      detail::add_kron(trips, ps_, Kx_conv_, vf_.Gv, -1.0);
      detail::add_kron(trips, ps_, Xaj_, vf_.Gv, 1.0);
      detail::add_kron(trips, ps_, Xb_, vf_.Gv_pos, 1.0);
      detail::add_kron(trips, ps_, Xa_, vf_.Gv_neg, 1.0);
      A_core_ = from_triplets(ps_.dim(), ps_.dim(), trips);
      std::vector<Triplet> pen;
      detail::add_kron(pen, ps_, Xjj_, vf_.Gv_abs, 0.5);
      A_penalty_ = from_triplets(ps_.dim(), ps_.dim(), pen);
    }

    // B: volume + upwind edges in v; split into the parts scaling with E and |E|
    {
      const Mesh1D& mv = Vv.mesh();
      std::vector<Triplet> vaj, vjj;
      for (int e = 0; e < mv.n_interior_edges(); ++e) {
        add_edge_avg_jump(vaj, Vv, Vv, e, 1.0);
        add_edge_jump_jump(vjj, Vv, Vv, e, 1.0);
      }
      const Eigen::MatrixXd Vaj =
          Eigen::MatrixXd(from_triplets(ps_.dimv(), ps_.dimv(), vaj));
      const Eigen::MatrixXd Vjj =
          Eigen::MatrixXd(from_triplets(ps_.dimv(), ps_.dimv(), vjj));
      std::vector<Triplet> trips;
      detail::add_kron(trips, ps_, Ex_space_, Kv_conv_, -1.0);
      detail::add_kron(trips, ps_, Ex_space_, Vaj, 1.0);
      B_signed_ = from_triplets(ps_.dim(), ps_.dim(), trips);
      std::vector<Triplet> abs_trips;
      detail::add_kron(abs_trips, ps_, Ex_abs_space_, Vjj, 0.5);
      B_abs_ = from_triplets(ps_.dim(), ps_.dim(), abs_trips);
      B_ = B_signed_ + B_abs_;
    }

    // D = <E M_h P(w), n_v z> on the two velocity endpoints
    {
      Eigen::MatrixXd Dv = Eigen::MatrixXd::Zero(ps_.dimv(), ps_.dimv());
      const int top = Vv.cell_dof(Vv.mesh().n_cells() - 1, Vv.degree());
      const int bot = Vv.cell_dof(0, 0);
      const double ML = M_.node_value(M_.mesh().n_cells());
      const double MmL = M_.node_value(0);
      for (int j = 0; j < ps_.dimv(); ++j) {
        Dv(top, j) += ML * W_[j];
        Dv(bot, j) -= MmL * W_[j];
      }
      std::vector<Triplet> trips;
      detail::add_kron(trips, ps_, Ex_space_, Dv, 1.0);
      D_ = from_triplets(ps_.dim(), ps_.dim(), trips);
    }

    // C = (1/(2 theta)) (E v_h w, z)
    {
      std::vector<Triplet> trips;
      detail::add_kron(trips, ps_, Ex_space_, vf_.Gv, 0.5 / data_.theta);
      C_ = from_triplets(ps_.dim(), ps_.dim(), trips);
    }

    // Q = (omega (M_h P(w) - w), z)
    {
      const Eigen::MatrixXd Qv = W_ * W_.transpose() - Mv_;
      std::vector<Triplet> trips;
      detail::add_kron(trips, ps_, omx_, Qv, 1.0);
      Q_ = from_triplets(ps_.dim(), ps_.dim(), trips);
    }

    {
      std::vector<Triplet> trips;
      detail::add_kron(trips, ps_, Mx_, Mv_, 1.0);
      Mass_ = from_triplets(ps_.dim(), ps_.dim(), trips);
    }
    {
      std::vector<Triplet> trips;
      detail::add_kron(trips, ps_, Xjj_, vf_.Gv_abs, 1.0);
      Fjump_ = from_triplets(ps_.dim(), ps_.dim(), trips);
      std::vector<Triplet> btrips;
      detail::add_kron(btrips, ps_, Xa_, vf_.Gv_abs, 1.0);
      detail::add_kron(btrips, ps_, Xb_, vf_.Gv_abs, 1.0);
      Fbound_ = from_triplets(ps_.dim(), ps_.dim(), btrips);
    }

    gammas_ = gamma_edges(M_);
    stab_ = stability_constants(data_, M_, trace_constant(Vv));
  }

  PhaseSpace ps_;
  DiscreteMaxwellian M_;
  ProblemData data_;
  int beta_;
  double eps_;

  detail::VelocityFactors vf_;
  Eigen::MatrixXd Mv_, Kv_conv_;
  Eigen::VectorXd m_, u_, W_, U_;
  double theta_hat_ = 0.0;

  SparseMat Mx_, Kx_conv_, omx_, Ex_space_, Ex_abs_space_, Xaj_, Xjj_, Xa_, Xb_;
  SparseMat Mass_, A_core_, A_penalty_, B_signed_, B_abs_, B_, D_, C_, Q_;
  SparseMat Fjump_, Fbound_;
  GammaCoefficients gammas_{};
  StabilityConstants stab_{};

 public:
  const SparseMat& Kx_conv() const { return Kx_conv_; }
  const SparseMat& Xaj() const { return Xaj_; }
  const SparseMat& Xjj() const { return Xjj_; }
};

/// Discretely isotropic initial state g_0 = rho_{0,h} M_h with rho_{0,h} the
/// L2 projection of rho_0 onto V_{x,h}.
inline KineticState initial_state(const KineticOperators& ops) {
  const SpatialField rho0 =
      l2_project([&](double x) { return ops.data().rho0(x); }, ops.phase_space().Vx,
                 ops.phase_space().Vx.degree() + 6);
  KineticState s;
  s.g = ops.isotropic(rho0.coeffs);
  s.eps = ops.eps();
  s.beta = ops.beta();
  s.t = 0.0;
  return s;
}

/// Backward-Euler step solver; refactorizes only when dt or the field's time
/// factor changes.
class KineticStepper {
 public:
  explicit KineticStepper(const KineticOperators& ops) : ops_(&ops) {}

  KineticState step(const KineticState& state, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be > 0");
    const double t_new = state.t + dt;
    const double factor = ops_->data().E_time_factor(t_new);
    if (!factorized_ || dt != dt_cached_ || factor != factor_cached_) {
      const SparseMat S = ops_->system_matrix(dt, t_new);
      solver_.compute(S);
      if (solver_.info() != Eigen::Success)
        throw std::runtime_error("step: implicit system factorization failed");
      S_cached_ = S;
      S_norm_inf_ = 0.0;
      for (int o = 0; o < S.outerSize(); ++o) {
        double row = 0.0;
        for (SparseMat::InnerIterator it(S, o); it; ++it) row += std::abs(it.value());
        S_norm_inf_ = std::max(S_norm_inf_, row);
      }
      dt_cached_ = dt;
      factor_cached_ = factor;
      factorized_ = true;
    }
    Eigen::VectorXd rhs = (state.eps / dt) * (ops_->Mass() * state.g);
    if (ops_->data().g_inflow) rhs += ops_->inflow_load(t_new);
    KineticState out;
    out.g = solver_.solve(rhs);
    // one pass of iterative refinement keeps the stiff 1/eps blocks honest
    Eigen::VectorXd resid = rhs - S_cached_ * out.g;
    out.g += solver_.solve(resid);
    resid = rhs - S_cached_ * out.g;
    // backward-error criterion: the 1/eps blocks make an rhs-relative residual
    // unreachable in double precision, so measure against ||S|| ||x|| as well
    const double scale =
        std::max({rhs.norm(), S_norm_inf_ * out.g.norm(), 1e-300});
    if (resid.norm() / scale > 1e-11)
      throw std::runtime_error("step: linear solve exceeded the 1e-11 residual tolerance");
    out.eps = state.eps;
    out.beta = state.beta;
    out.t = t_new;
    return out;
  }

 private:
  const KineticOperators* ops_;
  Eigen::SparseLU<SparseMat> solver_;
  SparseMat S_cached_;
  double S_norm_inf_ = 0.0;
  double dt_cached_ = -1.0;
  double factor_cached_ = 0.0;
  bool factorized_ = false;
};

struct Moments {
  SpatialField rho;
  SpatialField J;
};

inline Moments moments(const KineticState& state, const KineticOperators& ops) {
  Moments m;
  m.rho = SpatialField(ops.phase_space().Vx, ops.density(state.g));
  m.J = SpatialField(ops.phase_space().Vx, ops.current(state.g));
  return m;
}

}  // namespace semidg

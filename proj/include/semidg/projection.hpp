#pragma once

#include <random>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "semidg/norms.hpp"

namespace semidg {

/// L2-orthogonal projection of a scalar function onto a space.
inline SpatialField l2_project(const ScalarFn& target, const DGSpace& space,
                               int quad_pts = 0) {
  const SparseMat M = mass_matrix(space);
  const Eigen::VectorXd rhs = load_vector(space, target, quad_pts);
  Eigen::SimplicialLDLT<SparseMat> solver(M);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("l2_project: mass matrix factorization failed");
  return SpatialField(space, solver.solve(rhs));
}

/// L2-orthogonal projection of a discrete field onto another space on the same mesh.
inline SpatialField l2_project(const SpatialField& f, const DGSpace& space) {
  const SparseMat M = mass_matrix(space);
  const SparseMat B = mass_matrix(space, *f.space);
  Eigen::SimplicialLDLT<SparseMat> solver(M);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("l2_project: mass matrix factorization failed");
  return SpatialField(space, solver.solve(B * f.coeffs));
}

/// Conforming interpolant of a broken field.
///
/// beta = 0: map into S^0 by averaging the nodal values that meet at each interior
/// mesh node and zeroing the two boundary nodes (requires degree >= 1).
/// beta = 1: map into V^0 by zeroing the boundary-node coefficients only.
inline SpatialField conforming_interpolant(const SpatialField& f, int beta) {
  const DGSpace& V = *f.space;
  if (!V.is_broken())
    throw std::invalid_argument("conforming_interpolant: input must be a broken field");
  const Mesh1D& mesh = V.mesh();
  const int k = V.degree();
  if (beta == 1) {
    DGSpace out(mesh, k, Continuity::broken_zero_trace);
    Eigen::VectorXd c(out.dof_count());
    for (int cell = 0; cell < mesh.n_cells(); ++cell)
      for (int j = 0; j <= k; ++j) {
        const int g = out.cell_dof(cell, j);
        if (g >= 0) c[g] = f.coeff_at(cell, j);
      }
    return SpatialField(out, c);
  }
  if (beta != 0) throw std::invalid_argument("conforming_interpolant: beta must be 0 or 1");
  if (k < 1)
    throw std::invalid_argument(
        "conforming_interpolant: beta=0 requires degree >= 1 (no continuous subspace)");
  DGSpace out(mesh, k, Continuity::continuous_zero_trace);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(out.dof_count());
  for (int cell = 0; cell < mesh.n_cells(); ++cell) {
    for (int j = 0; j <= k; ++j) {
      const int g = out.cell_dof(cell, j);
      if (g < 0) continue;
      if (j == 0 && cell > 0) continue;  // interface value written once, from the left
      if (j == k && cell < mesh.n_cells() - 1) {
        c[g] = 0.5 * (f.coeff_at(cell, k) + f.coeff_at(cell + 1, 0));
      } else {
        c[g] = f.coeff_at(cell, j);
      }
    }
  }
  return SpatialField(out, c);
}

/// The beta-indexed conforming L2 projection S_h^beta from the broken space onto
/// S^0 (beta=0) or V^0 (beta=1), returned as a field in the target space.
inline SpatialField conforming_l2_projection(const SpatialField& f, int beta) {
  const DGSpace target = dual_test_space(f.space->mesh(), f.space->degree(), beta);
  return l2_project(f, target);
}

/// Measured H1h-stability ratio of S_h^beta over random broken fields; if
/// exact_sup is requested, also solves the dense generalized eigenproblem
///   (P^T H_X P) u = lambda H_V u  with P the projection matrix,
/// whose largest eigenvalue is the squared exact operator norm.
struct StabilityRatio {
  double sampled = 0.0;
  double exact = 0.0;
};

inline StabilityRatio projection_stability_ratio(const DGSpace& broken, int beta,
                                                 int n_samples, std::mt19937_64& rng,
                                                 bool exact_sup = false) {
  if (n_samples < 1)
    throw std::invalid_argument("projection_stability_ratio: n_samples >= 1 required");
  const DGSpace target = dual_test_space(broken.mesh(), broken.degree(), beta);
  const SparseMat Mx = mass_matrix(target);
  const SparseMat B = mass_matrix(target, broken);
  Eigen::SimplicialLDLT<SparseMat> solver(Mx);
  const SparseMat Hv = h1h_gram(broken);
  const SparseMat Hx = h1h_gram(target);

  StabilityRatio out;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int s = 0; s < n_samples; ++s) {
    Eigen::VectorXd q(broken.dof_count());
    for (int i = 0; i < q.size(); ++i) q[i] = gauss(rng);
    const Eigen::VectorXd p = solver.solve(B * q);
    const double num = p.dot(Hx * p);
    const double den = q.dot(Hv * q);
    if (den > 0.0) out.sampled = std::max(out.sampled, std::sqrt(num / den));
  }
  if (exact_sup) {
    const Eigen::MatrixXd P =
        solver.solve(Eigen::MatrixXd(B));  // dense projection matrix, desk scale
    const Eigen::MatrixXd Anum = P.transpose() * Eigen::MatrixXd(Hx) * P;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(Anum,
                                                                  Eigen::MatrixXd(Hv));
    out.exact = std::sqrt(eig.eigenvalues().maxCoeff());
  }
  return out;
}

}  // namespace semidg

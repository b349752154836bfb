#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "semidg/assembly.hpp"

namespace semidg {

/// L2 inner product of two fields over the same mesh (spaces may differ).
inline double l2_inner(const SpatialField& f, const SpatialField& g) {
  const Mesh1D& mesh = f.space->mesh();
  const int quad_pts = (f.space->degree() + g.space->degree()) / 2 + 2;
  const QuadratureRule q = gauss_legendre(quad_pts);
  double acc = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const double jac = 0.5 * mesh.h();
    for (int p = 0; p < q.size(); ++p)
      acc += jac * q.weights[p] * f.eval_on_cell(c, q.points[p]) *
             g.eval_on_cell(c, q.points[p]);
  }
  return acc;
}

inline double l2_norm(const SpatialField& f) { return std::sqrt(l2_inner(f, f)); }

/// L2 norm of f - g for fields over the same mesh (spaces may differ).
inline double l2_diff(const SpatialField& f, const SpatialField& g) {
  const Mesh1D& mesh = f.space->mesh();
  const int quad_pts = std::max(f.space->degree(), g.space->degree()) + 2;
  const QuadratureRule q = gauss_legendre(quad_pts);
  double acc = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const double jac = 0.5 * mesh.h();
    for (int p = 0; p < q.size(); ++p) {
      const double d = f.eval_on_cell(c, q.points[p]) - g.eval_on_cell(c, q.points[p]);
      acc += jac * q.weights[p] * d * d;
    }
  }
  return std::sqrt(acc);
}

/// L2 norm of f - target for a scalar function target.
inline double l2_error(const SpatialField& f, const ScalarFn& target, int quad_pts = 0) {
  const Mesh1D& mesh = f.space->mesh();
  if (quad_pts <= 0) quad_pts = f.space->degree() + 6;
  const QuadratureRule q = gauss_legendre(quad_pts);
  double acc = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const double jac = 0.5 * mesh.h();
    for (int p = 0; p < q.size(); ++p) {
      const double x = mesh.to_physical(c, q.points[p]);
      const double d = f.eval_on_cell(c, q.points[p]) - target(x);
      acc += jac * q.weights[p] * d * d;
    }
  }
  return std::sqrt(acc);
}

/// Squared broken H1 seminorm |f|^2 = sum_c int (f')^2.
inline double broken_h1_seminorm_sq(const SpatialField& f) {
  const Mesh1D& mesh = f.space->mesh();
  const QuadratureRule q = gauss_legendre(f.space->degree() + 2);
  double acc = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const double jac = 0.5 * mesh.h();
    for (int p = 0; p < q.size(); ++p) {
      const double d = f.deriv_on_cell(c, q.points[p]);
      acc += jac * q.weights[p] * d * d;
    }
  }
  return acc;
}

/// Squared jump seminorm over the interior skeleton.
inline double jump_seminorm_sq(const SpatialField& f) {
  double acc = 0.0;
  for (int e = 0; e < f.space->mesh().n_interior_edges(); ++e) {
    const auto [j, a] = jump_average(f, e);
    (void)a;
    acc += j * j;
  }
  return acc;
}

/// Squared boundary trace norm f(a)^2 + f(b)^2.
inline double boundary_trace_sq(const SpatialField& f) {
  const double ta = f.trace_a(), tb = f.trace_b();
  return ta * ta + tb * tb;
}

/// Discrete H1 norm: ||grad f||^2 + (1/h)||[[f]]||^2 + (1/h)||f||^2_boundary.
inline double h1h_norm(const SpatialField& f) {
  const double h = f.space->mesh().h();
  return std::sqrt(broken_h1_seminorm_sq(f) + jump_seminorm_sq(f) / h +
                   boundary_trace_sq(f) / h);
}

/// H1h Gram matrix of a space (SPD on zero-trace spaces and on broken spaces).
inline SparseMat h1h_gram(const DGSpace& space) {
  const double h = space.mesh().h();
  SparseMat G = stiffness_matrix(space);
  G += edge_jump_form(space, 1.0 / h);
  G += boundary_form(space, 1.0 / h, 1.0 / h);
  return G;
}

/// Dual-space test space for the beta-indexed discrete H^{-1} norm.
inline DGSpace dual_test_space(const Mesh1D& mesh, int degree, int beta) {
  if (beta == 0) return DGSpace(mesh, degree, Continuity::continuous_zero_trace);
  if (beta == 1) return DGSpace(mesh, degree, Continuity::broken_zero_trace);
  throw std::invalid_argument("dual_test_space: beta must be 0 or 1");
}

/// Discrete dual norm sup_q (z, q) / den(q) with q in S^0 (beta=0, den = ||grad q||)
/// or V^0 (beta=1, den = ||q||_{H1h}), computed through the SPD Riesz problem.
inline double dual_norm(const SpatialField& z, int beta) {
  const DGSpace test = dual_test_space(z.space->mesh(), std::max(z.space->degree(), 1), beta);
  if (test.dof_count() < 1)
    throw std::invalid_argument("dual_norm: test space is empty; refine the mesh");
  const SparseMat B = mass_matrix(test, *z.space);
  const Eigen::VectorXd b = B * z.coeffs;
  const SparseMat S = (beta == 0) ? stiffness_matrix(test) : h1h_gram(test);
  Eigen::SimplicialLDLT<SparseMat> solver(S);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("dual_norm: Riesz system factorization failed");
  const Eigen::VectorXd y = solver.solve(b);
  const double v = b.dot(y);
  return v > 0.0 ? std::sqrt(v) : 0.0;
}

}  // namespace semidg

#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "semidg/space.hpp"

namespace semidg {

using SparseMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using ScalarFn = std::function<double(double)>;

namespace detail {

inline void add_cell_block(std::vector<Triplet>& trips, const DGSpace& rows,
                           const DGSpace& cols, int c, const Eigen::MatrixXd& block) {
  for (int i = 0; i < rows.local_size(); ++i) {
    const int gi = rows.cell_dof(c, i);
    if (gi < 0) continue;
    for (int j = 0; j < cols.local_size(); ++j) {
      const int gj = cols.cell_dof(c, j);
      if (gj < 0) continue;
      trips.emplace_back(gi, gj, block(i, j));
    }
  }
}

}  // namespace detail

/// Weighted mass matrix (w phi_j, phi_i); weight == nullptr means w = 1.
/// quad_pts defaults to exact integration of the unweighted product.
inline SparseMat mass_matrix(const DGSpace& rows, const DGSpace& cols,
                             const ScalarFn& weight = nullptr, int quad_pts = 0) {
  const Mesh1D& mesh = rows.mesh();
  const int nl_r = rows.local_size(), nl_c = cols.local_size();
  if (quad_pts <= 0) quad_pts = (rows.degree() + cols.degree()) / 2 + 2;
  const QuadratureRule q = gauss_legendre(quad_pts);
  std::vector<Triplet> trips;
  Eigen::MatrixXd block(nl_r, nl_c);
  Eigen::MatrixXd vr(q.size(), nl_r), vc(q.size(), nl_c);
  for (int p = 0; p < q.size(); ++p) {
    for (int i = 0; i < nl_r; ++i) vr(p, i) = rows.basis().value(i, q.points[p]);
    for (int j = 0; j < nl_c; ++j) vc(p, j) = cols.basis().value(j, q.points[p]);
  }
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const double jac = 0.5 * mesh.h();
    block.setZero();
    for (int p = 0; p < q.size(); ++p) {
      const double x = mesh.to_physical(c, q.points[p]);
      const double w = jac * q.weights[p] * (weight ? weight(x) : 1.0);
      for (int i = 0; i < nl_r; ++i)
        for (int j = 0; j < nl_c; ++j) block(i, j) += w * vr(p, i) * vc(p, j);
    }
    detail::add_cell_block(trips, rows, cols, c, block);
  }
  SparseMat M(rows.dof_count(), cols.dof_count());
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

inline SparseMat mass_matrix(const DGSpace& space, const ScalarFn& weight = nullptr,
                             int quad_pts = 0) {
  return mass_matrix(space, space, weight, quad_pts);
}

/// Stiffness matrix (w phi_j', phi_i').
inline SparseMat stiffness_matrix(const DGSpace& space, const ScalarFn& weight = nullptr,
                                  int quad_pts = 0) {
  const Mesh1D& mesh = space.mesh();
  const int nl = space.local_size();
  if (quad_pts <= 0) quad_pts = space.degree() + 2;
  const QuadratureRule q = gauss_legendre(quad_pts);
  std::vector<Triplet> trips;
  Eigen::MatrixXd block(nl, nl);
  Eigen::MatrixXd dv(q.size(), nl);
  for (int p = 0; p < q.size(); ++p)
    for (int i = 0; i < nl; ++i) dv(p, i) = space.basis().derivative(i, q.points[p]);
  const double scale = 2.0 / mesh.h();
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const double jac = 0.5 * mesh.h();
    block.setZero();
    for (int p = 0; p < q.size(); ++p) {
      const double x = mesh.to_physical(c, q.points[p]);
      const double w = jac * q.weights[p] * (weight ? weight(x) : 1.0);
      for (int i = 0; i < nl; ++i)
        for (int j = 0; j < nl; ++j)
          block(i, j) += w * (scale * dv(p, i)) * (scale * dv(p, j));
    }
    detail::add_cell_block(trips, space, space, c, block);
  }
  SparseMat K(space.dof_count(), space.dof_count());
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

/// Convection matrix C[i,j] = (w phi_j, phi_i') : trial against test derivative.
inline SparseMat convection_matrix(const DGSpace& rows, const DGSpace& cols,
                                   const ScalarFn& weight = nullptr, int quad_pts = 0) {
  const Mesh1D& mesh = rows.mesh();
  const int nl_r = rows.local_size(), nl_c = cols.local_size();
  if (quad_pts <= 0) quad_pts = (rows.degree() + cols.degree()) / 2 + 2;
  const QuadratureRule q = gauss_legendre(quad_pts);
  std::vector<Triplet> trips;
  Eigen::MatrixXd block(nl_r, nl_c);
  const double scale = 2.0 / mesh.h();
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const double jac = 0.5 * mesh.h();
    block.setZero();
    for (int p = 0; p < q.size(); ++p) {
      const double x = mesh.to_physical(c, q.points[p]);
      const double w = jac * q.weights[p] * (weight ? weight(x) : 1.0);
      for (int i = 0; i < nl_r; ++i) {
        const double di = scale * rows.basis().derivative(i, q.points[p]);
        for (int j = 0; j < nl_c; ++j)
          block(i, j) += w * di * cols.basis().value(j, q.points[p]);
      }
    }
    detail::add_cell_block(trips, rows, cols, c, block);
  }
  SparseMat C(rows.dof_count(), cols.dof_count());
  C.setFromTriplets(trips.begin(), trips.end());
  return C;
}

/// Trace dofs of a space at interior edge e: (left cell end node, right cell start node).
struct EdgeDofs {
  int left;
  int right;
};

inline EdgeDofs edge_dofs(const DGSpace& s, int e) {
  return {s.cell_dof(e, s.degree()), s.cell_dof(e + 1, 0)};
}
inline int boundary_dof_a(const DGSpace& s) { return s.cell_dof(0, 0); }
inline int boundary_dof_b(const DGSpace& s) {
  return s.cell_dof(s.mesh().n_cells() - 1, s.degree());
}

/// Accumulate coef * jump(col) * jump(row) at interior edge e.
inline void add_edge_jump_jump(std::vector<Triplet>& trips, const DGSpace& rows,
                               const DGSpace& cols, int e, double coef) {
  const EdgeDofs r = edge_dofs(rows, e), c = edge_dofs(cols, e);
  const int ri[2] = {r.left, r.right};
  const int ci[2] = {c.left, c.right};
  const double rs[2] = {1.0, -1.0}, cs[2] = {1.0, -1.0};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      if (ri[i] >= 0 && ci[j] >= 0)
        trips.emplace_back(ri[i], ci[j], coef * rs[i] * cs[j]);
}

/// Accumulate coef * avg(col) * jump(row) at interior edge e.
inline void add_edge_avg_jump(std::vector<Triplet>& trips, const DGSpace& rows,
                              const DGSpace& cols, int e, double coef) {
  const EdgeDofs r = edge_dofs(rows, e), c = edge_dofs(cols, e);
  const int ri[2] = {r.left, r.right};
  const int ci[2] = {c.left, c.right};
  const double rs[2] = {1.0, -1.0}, cs[2] = {0.5, 0.5};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      if (ri[i] >= 0 && ci[j] >= 0)
        trips.emplace_back(ri[i], ci[j], coef * rs[i] * cs[j]);
}

/// Accumulate coef * jump(col) * avg(row) at interior edge e.
inline void add_edge_jump_avg(std::vector<Triplet>& trips, const DGSpace& rows,
                              const DGSpace& cols, int e, double coef) {
  const EdgeDofs r = edge_dofs(rows, e), c = edge_dofs(cols, e);
  const int ri[2] = {r.left, r.right};
  const int ci[2] = {c.left, c.right};
  const double rs[2] = {0.5, 0.5}, cs[2] = {1.0, -1.0};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      if (ri[i] >= 0 && ci[j] >= 0)
        trips.emplace_back(ri[i], ci[j], coef * rs[i] * cs[j]);
}

inline SparseMat from_triplets(int rows, int cols, const std::vector<Triplet>& trips) {
  SparseMat M(rows, cols);
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

/// Sum over interior edges of jump(col)*jump(row).
inline SparseMat edge_jump_form(const DGSpace& space, double coef = 1.0) {
  std::vector<Triplet> trips;
  for (int e = 0; e < space.mesh().n_interior_edges(); ++e)
    add_edge_jump_jump(trips, space, space, e, coef);
  return from_triplets(space.dof_count(), space.dof_count(), trips);
}

/// Boundary form coef_a * u(a)v(a) + coef_b * u(b)v(b).
inline SparseMat boundary_form(const DGSpace& space, double coef_a, double coef_b) {
  std::vector<Triplet> trips;
  const int da = boundary_dof_a(space), db = boundary_dof_b(space);
  if (da >= 0) trips.emplace_back(da, da, coef_a);
  if (db >= 0) trips.emplace_back(db, db, coef_b);
  return from_triplets(space.dof_count(), space.dof_count(), trips);
}

/// Load vector (f, phi_i).
inline Eigen::VectorXd load_vector(const DGSpace& space, const ScalarFn& f,
                                   int quad_pts = 0) {
  const Mesh1D& mesh = space.mesh();
  if (quad_pts <= 0) quad_pts = space.degree() + 4;
  const QuadratureRule q = gauss_legendre(quad_pts);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(space.dof_count());
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const double jac = 0.5 * mesh.h();
    for (int p = 0; p < q.size(); ++p) {
      const double x = mesh.to_physical(c, q.points[p]);
      const double w = jac * q.weights[p] * f(x);
      for (int j = 0; j < space.local_size(); ++j) {
        const int g = space.cell_dof(c, j);
        if (g >= 0) rhs[g] += w * space.basis().value(j, q.points[p]);
      }
    }
  }
  return rhs;
}

}  // namespace semidg

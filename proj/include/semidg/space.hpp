#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "semidg/mesh.hpp"
#include "semidg/quadrature.hpp"

namespace semidg {

enum class Continuity {
  broken,                 // V_h : fully discontinuous
  broken_zero_trace,      // V_h^0 : discontinuous, zero trace on the domain boundary
  continuous,             // S_h : C^0 conforming
  continuous_zero_trace,  // S_h^0 : C^0 conforming with zero trace
};

inline std::string to_string(Continuity c) {
  switch (c) {
    case Continuity::broken: return "broken";
    case Continuity::broken_zero_trace: return "broken_zero_trace";
    case Continuity::continuous: return "continuous";
    case Continuity::continuous_zero_trace: return "continuous_zero_trace";
  }
  return "?";
}

/// Lagrange basis on [-1,1] at a given node set, evaluated by direct products.
class LagrangeBasis {
 public:
  explicit LagrangeBasis(Eigen::VectorXd nodes) : nodes_(std::move(nodes)) {}

  int size() const { return static_cast<int>(nodes_.size()); }
  const Eigen::VectorXd& nodes() const { return nodes_; }

  double value(int j, double xi) const {
    double v = 1.0;
    for (int m = 0; m < size(); ++m) {
      if (m == j) continue;
      v *= (xi - nodes_[m]) / (nodes_[j] - nodes_[m]);
    }
    return v;
  }

  double derivative(int j, double xi) const {
    double d = 0.0;
    for (int l = 0; l < size(); ++l) {
      if (l == j) continue;
      double term = 1.0 / (nodes_[j] - nodes_[l]);
      for (int m = 0; m < size(); ++m) {
        if (m == j || m == l) continue;
        term *= (xi - nodes_[m]) / (nodes_[j] - nodes_[m]);
      }
      d += term;
    }
    return d;
  }

 private:
  Eigen::VectorXd nodes_;
};

/// Broken or conforming polynomial space on a uniform 1D mesh.
///
/// The local basis is nodal Lagrange at Gauss-Lobatto points, so traces at cell
/// endpoints are single nodal coefficients and the conforming interpolants act
/// directly on nodal values. Constrained (zero-trace) degrees of freedom are
/// reported as -1 by cell_dof.
class DGSpace {
 public:
  DGSpace(Mesh1D mesh, int degree, Continuity continuity)
      : mesh_(std::move(mesh)),
        k_(degree),
        cont_(continuity),
        basis_(gauss_lobatto_nodes(degree + 1)) {
    if (degree < 0) throw std::invalid_argument("DGSpace: degree must be >= 0");
    const bool conforming =
        cont_ == Continuity::continuous || cont_ == Continuity::continuous_zero_trace;
    if (conforming && degree < 1)
      throw std::invalid_argument("DGSpace: continuous spaces require degree >= 1");
    if (cont_ == Continuity::continuous_zero_trace && mesh_.n_cells() * degree - 1 < 1)
      throw std::invalid_argument("DGSpace: continuous_zero_trace space is empty");
  }

  const Mesh1D& mesh() const { return mesh_; }
  int degree() const { return k_; }
  Continuity continuity() const { return cont_; }
  const LagrangeBasis& basis() const { return basis_; }
  int local_size() const { return k_ + 1; }

  bool is_broken() const {
    return cont_ == Continuity::broken || cont_ == Continuity::broken_zero_trace;
  }
  bool has_zero_trace() const {
    return cont_ == Continuity::broken_zero_trace ||
           cont_ == Continuity::continuous_zero_trace;
  }

  int dof_count() const {
    const int n = mesh_.n_cells();
    switch (cont_) {
      case Continuity::broken: return n * (k_ + 1);
      case Continuity::broken_zero_trace: return n * (k_ + 1) - 2;
      case Continuity::continuous: return n * k_ + 1;
      case Continuity::continuous_zero_trace: return n * k_ - 1;
    }
    return 0;
  }

  /// Global dof of local node j on cell c; -1 for a constrained zero-trace node.
  int cell_dof(int c, int j) const {
    const int n = mesh_.n_cells();
    switch (cont_) {
      case Continuity::broken:
        return c * (k_ + 1) + j;
      case Continuity::broken_zero_trace: {
        if (c == 0 && j == 0) return -1;
        if (c == n - 1 && j == k_) return -1;
        return c * (k_ + 1) + j - 1;  // one constrained node precedes every dof
      }
      case Continuity::continuous:
        return c * k_ + j;
      case Continuity::continuous_zero_trace: {
        const int raw = c * k_ + j;
        if (raw == 0 || raw == n * k_) return -1;
        return raw - 1;
      }
    }
    return -1;
  }

  /// Physical coordinate of local node j on cell c.
  double node_coord(int c, int j) const {
    return mesh_.to_physical(c, basis_.nodes()[j]);
  }

 private:
  Mesh1D mesh_;
  int k_;
  Continuity cont_;
  LagrangeBasis basis_;
};

/// Coefficient vector over a DGSpace. The space is held by value through a
/// shared pointer so fields may outlive the space object they were built from.
struct SpatialField {
  std::shared_ptr<const DGSpace> space;
  Eigen::VectorXd coeffs;

  SpatialField() = default;
  SpatialField(const DGSpace& s, Eigen::VectorXd c)
      : space(std::make_shared<DGSpace>(s)), coeffs(std::move(c)) {
    if (coeffs.size() != s.dof_count())
      throw std::invalid_argument("SpatialField: coefficient length != dof_count");
  }

  static SpatialField zero(const DGSpace& s) {
    return SpatialField(s, Eigen::VectorXd::Zero(s.dof_count()));
  }

  double coeff_at(int c, int j) const {
    const int g = space->cell_dof(c, j);
    return g < 0 ? 0.0 : coeffs[g];
  }

  /// Value at reference coordinate xi on cell c.
  double eval_on_cell(int c, double xi) const {
    double v = 0.0;
    for (int j = 0; j < space->local_size(); ++j)
      v += coeff_at(c, j) * space->basis().value(j, xi);
    return v;
  }

  /// Broken derivative at reference coordinate xi on cell c (physical scaling).
  double deriv_on_cell(int c, double xi) const {
    double v = 0.0;
    for (int j = 0; j < space->local_size(); ++j)
      v += coeff_at(c, j) * space->basis().derivative(j, xi);
    return v * 2.0 / space->mesh().h();
  }

  double eval(double x) const {
    const int c = space->mesh().locate(x);
    const double xi = 2.0 * (x - space->mesh().cell_center(c)) / space->mesh().h();
    return eval_on_cell(c, xi);
  }

  /// One-sided traces at interior edge e (between cells e and e+1).
  double trace_left(int e) const { return eval_on_cell(e, 1.0); }
  double trace_right(int e) const { return eval_on_cell(e + 1, -1.0); }
  /// Traces at the domain boundary.
  double trace_a() const { return eval_on_cell(0, -1.0); }
  double trace_b() const { return eval_on_cell(space->mesh().n_cells() - 1, 1.0); }
};

/// Signed jump and average at interior edge e with 1D normals n = +/-1:
/// jump = u_left - u_right, average = (u_left + u_right) / 2.
inline std::pair<double, double> jump_average(const SpatialField& f, int e) {
  const int ne = f.space->mesh().n_interior_edges();
  if (e < 0 || e >= ne)
    throw std::out_of_range("jump_average: edge index is not an interior edge");
  const double ul = f.trace_left(e);
  const double ur = f.trace_right(e);
  return {ul - ur, 0.5 * (ul + ur)};
}

}  // namespace semidg

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace semidg {

/// Uniform mesh of an interval [a, b] with n_cells >= 2 cells.
///
/// Nodes are stored explicitly so symmetric meshes can be constructed with
/// bitwise mirror symmetry (node[i] == -node[n-i]), which several velocity-space
/// identities rely on.
class Mesh1D {
 public:
  Mesh1D(double a, double b, int n_cells) : a_(a), b_(b), n_(n_cells) {
    if (!(b > a)) throw std::invalid_argument("Mesh1D: requires b > a");
    if (n_cells < 2) throw std::invalid_argument("Mesh1D: requires n_cells >= 2");
    h_ = (b - a) / n_cells;
    nodes_.resize(n_ + 1);
    for (int i = 0; i <= n_; ++i) nodes_[i] = a + i * h_;
    nodes_[n_] = b;
  }

  /// Mesh of [-L, L] whose node set is exactly mirror symmetric about 0.
  static Mesh1D symmetric(double L, int n_cells) {
    Mesh1D m(-L, L, n_cells);
    for (int i = 0; i <= n_cells / 2; ++i) {
      m.nodes_[i] = -m.nodes_[n_cells - i];
    }
    if (n_cells % 2 == 0) m.nodes_[n_cells / 2] = 0.0;
    return m;
  }

  double a() const { return a_; }
  double b() const { return b_; }
  int n_cells() const { return n_; }
  double h() const { return h_; }
  double node(int i) const { return nodes_[i]; }
  double cell_left(int c) const { return nodes_[c]; }
  double cell_right(int c) const { return nodes_[c + 1]; }
  double cell_center(int c) const { return 0.5 * (nodes_[c] + nodes_[c + 1]); }

  bool is_symmetric() const {
    for (int i = 0; i <= n_; ++i) {
      if (nodes_[i] != -nodes_[n_ - i]) return false;
    }
    return true;
  }

  /// Map a reference coordinate xi in [-1,1] to physical coordinates on cell c.
  double to_physical(int c, double xi) const {
    return cell_center(c) + 0.5 * h_ * xi;
  }

  /// Cell containing x, clamped to [0, n_cells-1].
  int locate(double x) const {
    int c = static_cast<int>(std::floor((x - a_) / h_));
    if (c < 0) c = 0;
    if (c >= n_) c = n_ - 1;
    return c;
  }

  int n_interior_edges() const { return n_ - 1; }
  /// Coordinate of interior edge e (between cells e and e+1), e in [0, n_cells-2].
  double edge_coord(int e) const { return nodes_[e + 1]; }

 private:
  double a_, b_, h_;
  int n_;
  std::vector<double> nodes_;
};

}  // namespace semidg

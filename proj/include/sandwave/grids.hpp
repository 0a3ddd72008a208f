#pragma once

#include <Eigen/Dense>
#include <vector>

// Storage and interpolation for functions on the closed triangle
//   D = { (x, y) : 0 <= x <= y <= 1 }
// discretized on a uniform N x N lattice (nodes (i h, j h), j >= i, h = 1/N),
// plus a thin wrapper for vector-valued functions on the unit interval.

namespace sandwave {

class TriGrid {
 public:
  TriGrid() = default;
  explicit TriGrid(int N, double fill = 0.0);

  int N() const { return N_; }
  double h() const { return 1.0 / N_; }
  int node_count() const { return static_cast<int>(data_.size()); }

  double& at(int i, int j);              // requires 0 <= i <= j <= N
  double at(int i, int j) const;
  double x_of(int i) const { return static_cast<double>(i) / N_; }

  // Piecewise-linear interpolation anywhere in D. Cells cut by the diagonal
  // use barycentric interpolation on the in-domain triangle; queries are
  // clamped onto D so roundoff excursions below the diagonal are harmless.
  double interp(double x, double y) const;

  // Value along the top edge y = 1 and the diagonal y = x.
  double top(int i) const { return at(i, N_); }
  double diag(int i) const { return at(i, i); }

  double sup_abs() const;
  double sup_abs_diff(const TriGrid& other) const;  // grids must match

  // Sample onto an arbitrary ascending coordinate set along y = const or
  // refine/coarsen to another TriGrid by interpolation.
  TriGrid resampled(int newN) const;

 private:
  int index(int i, int j) const { return offsets_[static_cast<size_t>(i)] + (j - i); }
  int N_ = 0;
  std::vector<int> offsets_;
  std::vector<double> data_;
};

// Vector-valued samples on the uniform unit-interval grid: column j holds the
// value at x_j = j/N, one row per component.
class LineGrid {
 public:
  LineGrid() = default;
  LineGrid(int dim, int N, double fill = 0.0)
      : N_(N), vals_(Eigen::MatrixXd::Constant(dim, N + 1, fill)) {}

  int N() const { return N_; }
  double h() const { return 1.0 / N_; }
  int dim() const { return static_cast<int>(vals_.rows()); }
  double x_of(int j) const { return static_cast<double>(j) / N_; }

  Eigen::MatrixXd& values() { return vals_; }
  const Eigen::MatrixXd& values() const { return vals_; }
  Eigen::VectorXd col(int j) const { return vals_.col(j); }
  void set_col(int j, const Eigen::VectorXd& v) { vals_.col(j) = v; }

  // Scalar accessors for dim-1 grids.
  double& s(int j) { return vals_(0, j); }
  double s(int j) const { return vals_(0, j); }

  Eigen::VectorXd interp(double x) const;  // linear, clamped to [0,1]

  // Centered differences inside, one-sided second-order at the endpoints.
  LineGrid derivative() const;

  double sup_abs() const { return vals_.size() ? vals_.cwiseAbs().maxCoeff() : 0.0; }
  double sup_abs_diff(const LineGrid& o) const {
    return (vals_ - o.vals_).cwiseAbs().maxCoeff();
  }

 private:
  int N_ = 0;
  Eigen::MatrixXd vals_;
};

// Composite trapezoid weight for node j of an (N+1)-node unit-interval grid.
inline double trap_weight(int j, int N) {
  return (j == 0 || j == N) ? 0.5 / N : 1.0 / N;
}

}  // namespace sandwave

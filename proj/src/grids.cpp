#include "sandwave/grids.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace sandwave {

TriGrid::TriGrid(int N, double fill) : N_(N) {
  if (N < 1) throw std::invalid_argument("TriGrid: N must be >= 1");
  offsets_.resize(static_cast<size_t>(N + 1));
  int off = 0;
  for (int i = 0; i <= N; ++i) {
    offsets_[static_cast<size_t>(i)] = off;
    off += N + 1 - i;
  }
  data_.assign(static_cast<size_t>(off), fill);
}

double& TriGrid::at(int i, int j) {
  assert(i >= 0 && j >= i && j <= N_);
  return data_[static_cast<size_t>(index(i, j))];
}

double TriGrid::at(int i, int j) const {
  assert(i >= 0 && j >= i && j <= N_);
  return data_[static_cast<size_t>(index(i, j))];
}

double TriGrid::interp(double x, double y) const {
  // Clamp onto D.
  x = std::clamp(x, 0.0, 1.0);
  y = std::clamp(y, 0.0, 1.0);
  if (x > y) {
    const double mid = 0.5 * (x + y);  // snap tiny below-diagonal excursions
    x = y = mid;
  }
  const double gx = x * N_, gy = y * N_;
  int i = std::min(static_cast<int>(gx), N_ - 1);
  int j = std::min(static_cast<int>(gy), N_ - 1);
  if (j < i) j = i;
  double u = gx - i, v = gy - j;
  if (j > i) {
    // Full square cell inside D: bilinear.
    const double f00 = at(i, j), f01 = at(i, j + 1);
    const double f10 = at(i + 1, j), f11 = at(i + 1, j + 1);
    return (1 - u) * ((1 - v) * f00 + v * f01) + u * ((1 - v) * f10 + v * f11);
  }
  // Diagonal cell: only the upper-left triangle {v >= u} lies in D.
  if (v < u) v = u;  // roundoff guard
  return at(i, j) * (1.0 - v) + at(i, j + 1) * (v - u) + at(i + 1, j + 1) * u;
}

double TriGrid::sup_abs() const {
  double s = 0.0;
  for (double d : data_) s = std::max(s, std::abs(d));
  return s;
}

double TriGrid::sup_abs_diff(const TriGrid& other) const {
  assert(N_ == other.N_);
  double s = 0.0;
  for (size_t k = 0; k < data_.size(); ++k)
    s = std::max(s, std::abs(data_[k] - other.data_[k]));
  return s;
}

TriGrid TriGrid::resampled(int newN) const {
  TriGrid out(newN);
  for (int i = 0; i <= newN; ++i)
    for (int j = i; j <= newN; ++j)
      out.at(i, j) = interp(out.x_of(i), out.x_of(j));
  return out;
}

Eigen::VectorXd LineGrid::interp(double x) const {
  const double gx = std::clamp(x, 0.0, 1.0) * N_;
  const int j = std::min(static_cast<int>(gx), N_ - 1);
  const double u = gx - j;
  return (1.0 - u) * vals_.col(j) + u * vals_.col(j + 1);
}

LineGrid LineGrid::derivative() const {
  LineGrid d(dim(), N_);
  const double h = this->h();
  if (N_ == 1) {
    d.vals_.col(0) = (vals_.col(1) - vals_.col(0)) / h;
    d.vals_.col(1) = d.vals_.col(0);
    return d;
  }
  d.vals_.col(0) =
      (-1.5 * vals_.col(0) + 2.0 * vals_.col(1) - 0.5 * vals_.col(2)) / h;
  for (int j = 1; j < N_; ++j)
    d.vals_.col(j) = (vals_.col(j + 1) - vals_.col(j - 1)) / (2.0 * h);
  d.vals_.col(N_) =
      (1.5 * vals_.col(N_) - 2.0 * vals_.col(N_ - 1) + 0.5 * vals_.col(N_ - 2)) / h;
  return d;
}

}  // namespace sandwave

#include "sandwave/filters.hpp"

#include <cmath>
#include <stdexcept>

#include "sandwave/model.hpp"

namespace sandwave {

namespace {

// Ascending-power coefficients (in z^{-1}) of
//   sum_k c_k (2/dt)^k (1 - z^{-1})^k (1 + z^{-1})^{n-k}
// which is den(s)|_{s = Tustin} cleared of its (1+z^{-1})^n denominator.
std::vector<double> tustin_poly(const Eigen::VectorXd& c_asc, int n, double dt) {
  std::vector<double> out(static_cast<std::size_t>(n) + 1, 0.0);
  const double two_dt = 2.0 / dt;
  for (int k = 0; k < c_asc.size(); ++k) {
    if (c_asc[k] == 0.0) continue;
    // (1 - x)^k (1 + x)^{n-k} with x = z^{-1}
    std::vector<double> term(static_cast<std::size_t>(n) + 1, 0.0);
    term[0] = 1.0;
    // multiply by (1 - x)^k
    for (int rep = 0; rep < k; ++rep)
      for (int j = n; j >= 1; --j) term[static_cast<std::size_t>(j)] -= term[static_cast<std::size_t>(j - 1)];
    // multiply by (1 + x)^{n-k}
    for (int rep = 0; rep < n - k; ++rep)
      for (int j = n; j >= 1; --j) term[static_cast<std::size_t>(j)] += term[static_cast<std::size_t>(j - 1)];
    const double scale = c_asc[k] * std::pow(two_dt, k);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += scale * term[j];
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// DelayLine

DelayLine::DelayLine(int depth, double initial) {
  if (depth < 0) throw ConfigError("delay line depth must be nonnegative");
  buf_.assign(static_cast<std::size_t>(depth) + 1, initial);
}

double DelayLine::push(double v) {
  const int n = static_cast<int>(buf_.size());
  head_ = (head_ + 1) % n;
  buf_[static_cast<std::size_t>(head_)] = v;
  return buf_[static_cast<std::size_t>((head_ + 1) % n)];
}

double DelayLine::operator[](int lag) const {
  const int n = static_cast<int>(buf_.size());
  if (lag < 0 || lag >= n) throw ConfigError("delay line tap out of range");
  return buf_[static_cast<std::size_t>(((head_ - lag) % n + n) % n)];
}

// ---------------------------------------------------------------------------
// FeedbackDelayLoop

FeedbackDelayLoop::FeedbackDelayLoop(double rho, int K) : rho_(rho), mem_(K) {
  if (K < 1) throw ConfigError("feedback delay loop needs a positive delay");
  if (std::abs(rho) >= 1.0)
    throw ConfigError("feedback delay loop gain must satisfy |rho| < 1");
}

double FeedbackDelayLoop::step(double u) {
  const double y = u + rho_ * mem_[mem_.depth() - 1];
  mem_.push(y);
  return y;
}

std::complex<double> FeedbackDelayLoop::freq_response(double w, double dt) const {
  const std::complex<double> zmk =
      std::exp(std::complex<double>(0.0, -w * dt * mem_.depth()));
  return 1.0 / (1.0 - rho_ * zmk);
}

// ---------------------------------------------------------------------------
// TrapezoidalStateSpace

TrapezoidalStateSpace::TrapezoidalStateSpace(const Eigen::MatrixXd& A,
                                             const Eigen::MatrixXd& B,
                                             const Eigen::MatrixXd& C,
                                             const Eigen::MatrixXd& D,
                                             double dt)
    : A_(A), B_(B), C_(C), D_(D), dt_(dt) {
  const auto n = A.rows();
  if (A.cols() != n || B.rows() != n || C.cols() != n || D.rows() != C.rows() ||
      D.cols() != B.cols())
    throw ConfigError("state-space block dimensions are inconsistent");
  if (!(dt > 0.0)) throw ConfigError("state-space block needs dt > 0");
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  lu_.compute((2.0 / dt) * I - A);
  rhsA_ = (2.0 / dt) * I + A;
  x_ = Eigen::VectorXd::Zero(n);
  uprev_ = Eigen::VectorXd::Zero(B.cols());
}

Eigen::VectorXd TrapezoidalStateSpace::step(const Eigen::VectorXd& u) {
  x_ = lu_.solve(rhsA_ * x_ + B_ * (uprev_ + u));
  uprev_ = u;
  return C_ * x_ + D_ * u;
}

Eigen::MatrixXcd TrapezoidalStateSpace::freq_response(double w) const {
  const std::complex<double> z = std::exp(std::complex<double>(0.0, w * dt_));
  const std::complex<double> sb = (2.0 / dt_) * (z - 1.0) / (z + 1.0);
  const auto n = A_.rows();
  Eigen::MatrixXcd M = sb * Eigen::MatrixXcd::Identity(n, n) - A_.cast<std::complex<double>>();
  return C_.cast<std::complex<double>>() * M.lu().solve(B_.cast<std::complex<double>>()) +
         D_.cast<std::complex<double>>();
}

void TrapezoidalStateSpace::reset() {
  x_.setZero();
  uprev_.setZero();
}

// ---------------------------------------------------------------------------
// BilinearSiso

BilinearSiso::BilinearSiso(const Eigen::VectorXd& num_asc,
                           const Eigen::VectorXd& den_asc, double dt)
    : dt_(dt) {
  if (den_asc.size() == 0 || den_asc[den_asc.size() - 1] == 0.0)
    throw ConfigError("rational filter denominator has a vanishing leading coefficient");
  if (num_asc.size() > den_asc.size())
    throw ConfigError("rational filter must be proper (deg num <= deg den)");
  if (!(dt > 0.0)) throw ConfigError("rational filter needs dt > 0");
  const int n = static_cast<int>(den_asc.size()) - 1;
  b_ = tustin_poly(num_asc, n, dt);
  a_ = tustin_poly(den_asc, n, dt);
  const double a0 = a_[0];
  if (a0 == 0.0)
    throw NumericalError("Tustin discretization produced a singular filter");
  for (auto& v : b_) v /= a0;
  for (auto& v : a_) v /= a0;
  st_.assign(static_cast<std::size_t>(n), 0.0);
}

double BilinearSiso::step(double u) {
  // transposed direct form II
  const double y = b_[0] * u + (st_.empty() ? 0.0 : st_[0]);
  for (std::size_t i = 0; i + 1 < st_.size(); ++i)
    st_[i] = b_[i + 1] * u - a_[i + 1] * y + st_[i + 1];
  if (!st_.empty()) st_.back() = b_.back() * u - a_.back() * y;
  return y;
}

std::complex<double> BilinearSiso::freq_response(double w) const {
  const std::complex<double> zi = std::exp(std::complex<double>(0.0, -w * dt_));
  std::complex<double> num = 0.0, den = 0.0, zp = 1.0;
  for (std::size_t i = 0; i < a_.size(); ++i) {
    num += b_[i] * zp;
    den += a_[i] * zp;
    zp *= zi;
  }
  return num / den;
}

void BilinearSiso::reset() { std::fill(st_.begin(), st_.end(), 0.0); }

}  // namespace sandwave

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

// Fixed-step discrete-time building blocks for the realized feedback laws:
// ring-buffer delay lines, a scalar feedback delay loop, and trapezoidal
// (Tustin) discretizations of continuous LTI blocks. Every block exposes the
// exact frequency response of the recurrence it actually implements, so the
// synthesized and realized laws can be compared without re-deriving either.

namespace sandwave {

// Ring buffer over the last `depth`+1 samples. operator[](k) reads the sample
// pushed k steps ago (0 = the most recent push).
class DelayLine {
 public:
  DelayLine() = default;
  explicit DelayLine(int depth, double initial = 0.0);
  double push(double v);  // returns the sample from `depth` pushes ago
  double operator[](int lag) const;
  int depth() const { return static_cast<int>(buf_.size()) - 1; }

 private:
  std::vector<double> buf_;
  int head_ = 0;
};

// y_k = u_k + rho * y_{k-K}; |rho| < 1 keeps the loop a contraction.
class FeedbackDelayLoop {
 public:
  FeedbackDelayLoop() = default;
  FeedbackDelayLoop(double rho, int K);
  double step(double u);
  std::complex<double> freq_response(double w, double dt) const;

 private:
  double rho_ = 0.0;
  DelayLine mem_;
};

// Trapezoidal (Tustin) step of dx/dt = A x + B u, y = C x + D u, with the
// input averaged across the step:
//   (2/dt I - A) x_{k+1} = (2/dt I + A) x_k + B (u_k + u_{k+1}).
// step() consumes u_{k+1} and returns y_{k+1}.
class TrapezoidalStateSpace {
 public:
  TrapezoidalStateSpace() = default;
  TrapezoidalStateSpace(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                        const Eigen::MatrixXd& C, const Eigen::MatrixXd& D,
                        double dt);
  Eigen::VectorXd step(const Eigen::VectorXd& u);
  // H(z) at z = e^{iw dt}: C ((2/dt)(z-1)/(z+1) I - A)^{-1} B + D.
  Eigen::MatrixXcd freq_response(double w) const;
  void reset();
  const Eigen::VectorXd& state() const { return x_; }

 private:
  Eigen::MatrixXd A_, B_, C_, D_, rhsA_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  Eigen::VectorXd x_, uprev_;
  double dt_ = 0.0;
};

// Tustin discretization of the proper rational H(s) = num(s)/den(s)
// (ascending coefficients, deg num <= deg den), realized in transposed
// direct form II.
class BilinearSiso {
 public:
  BilinearSiso() = default;
  BilinearSiso(const Eigen::VectorXd& num_asc, const Eigen::VectorXd& den_asc,
               double dt);
  double step(double u);
  std::complex<double> freq_response(double w) const;
  void reset();
  int order() const { return static_cast<int>(a_.size()) - 1; }

 private:
  std::vector<double> b_, a_;  // powers of z^{-1}, a_[0] == 1
  std::vector<double> st_;
  double dt_ = 0.0;
};

}  // namespace sandwave

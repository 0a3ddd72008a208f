#include "sandwave/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>

namespace sandwave::la {

MatrixXd expm(const MatrixXd& A) { return A.exp(); }

double max_real_eig(const MatrixXd& A) {
  Eigen::EigenSolver<MatrixXd> es(A, /*computeEigenvectors=*/false);
  return es.eigenvalues().real().maxCoeff();
}

bool is_hurwitz(const MatrixXd& A, double margin) {
  return max_real_eig(A) < -margin;
}

// Faddeev-LeVerrier: with M_1 = I, c_{n-1} = -tr(A M_1), and
//   M_{k+1} = A M_k + c_{n-k} I,  c_{n-k-1} = -tr(A M_{k+1})/(k+1),
// det(sI - A) = s^n + c_{n-1} s^{n-1} + ... + c_0 and
// adj(sI - A) = sum_k M_{k+1} s^{n-1-k}.
namespace {
void leverrier(const MatrixXd& A, VectorXd& coeffs, std::vector<MatrixXd>& Ms) {
  const int n = static_cast<int>(A.rows());
  coeffs = VectorXd::Zero(n + 1);
  coeffs(n) = 1.0;
  Ms.clear();
  MatrixXd M = MatrixXd::Identity(n, n);
  for (int k = 1; k <= n; ++k) {
    Ms.push_back(M);
    const double c = -(A * M).trace() / static_cast<double>(k);
    coeffs(n - k) = c;
    if (k < n) M = A * M + c * MatrixXd::Identity(n, n);
  }
}
}  // namespace

VectorXd char_poly(const MatrixXd& A) {
  VectorXd coeffs;
  std::vector<MatrixXd> Ms;
  leverrier(A, coeffs, Ms);
  return coeffs;
}

VectorXd siso_numerator(const MatrixXd& A, const VectorXd& B, const RowVectorXd& C) {
  VectorXd coeffs;
  std::vector<MatrixXd> Ms;
  leverrier(A, coeffs, Ms);
  const int n = static_cast<int>(A.rows());
  VectorXd num = VectorXd::Zero(n);  // degree <= n-1
  for (int k = 0; k < n; ++k) {
    // Ms[k] multiplies s^{n-1-k}.
    num(n - 1 - k) = (C * Ms[static_cast<size_t>(k)] * B)(0);
  }
  return num;
}

std::complex<double> eval_poly(const VectorXd& ascending, std::complex<double> s) {
  std::complex<double> acc(0.0, 0.0);
  for (int k = static_cast<int>(ascending.size()) - 1; k >= 0; --k)
    acc = acc * s + ascending(k);
  return acc;
}

std::vector<std::complex<double>> poly_roots(const VectorXd& ascending) {
  // Trim negligible leading coefficients relative to the largest magnitude.
  int deg = static_cast<int>(ascending.size()) - 1;
  const double scale = ascending.cwiseAbs().maxCoeff();
  while (deg > 0 && std::abs(ascending(deg)) < 1e-14 * scale) --deg;
  std::vector<std::complex<double>> roots;
  if (deg < 1) return roots;
  MatrixXd comp = MatrixXd::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < deg; ++i) comp(i, deg - 1) = -ascending(i) / ascending(deg);
  Eigen::EigenSolver<MatrixXd> es(comp, false);
  roots.reserve(static_cast<size_t>(deg));
  for (int i = 0; i < deg; ++i) roots.push_back(es.eigenvalues()(i));
  return roots;
}

namespace {
bool pbh_rank_full(const MatrixXd& A, const MatrixXd& BorC, bool input_side,
                   double margin) {
  const int n = static_cast<int>(A.rows());
  Eigen::EigenSolver<MatrixXd> es(A, false);
  const double scale = std::max(1.0, A.norm());
  for (int i = 0; i < n; ++i) {
    const std::complex<double> lam = es.eigenvalues()(i);
    if (lam.real() < -margin) continue;  // stable modes need no test
    Eigen::MatrixXcd P;
    if (input_side) {
      P.resize(n, n + BorC.cols());
      P.leftCols(n) = lam * Eigen::MatrixXcd::Identity(n, n) - A.cast<std::complex<double>>();
      P.rightCols(BorC.cols()) = BorC.cast<std::complex<double>>();
    } else {
      P.resize(n + BorC.rows(), n);
      P.topRows(n) = lam * Eigen::MatrixXcd::Identity(n, n) - A.cast<std::complex<double>>();
      P.bottomRows(BorC.rows()) = BorC.cast<std::complex<double>>();
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(P);
    if (svd.singularValues()(svd.singularValues().size() - 1) < 1e-10 * scale)
      return false;
  }
  return true;
}
}  // namespace

bool pbh_stabilizable(const MatrixXd& A, const MatrixXd& B, double margin) {
  return pbh_rank_full(A, B, /*input_side=*/true, margin);
}

bool pbh_detectable(const MatrixXd& A, const MatrixXd& C, double margin) {
  return pbh_rank_full(A, C, /*input_side=*/false, margin);
}

std::vector<std::complex<double>> invariant_zeros(const MatrixXd& A,
                                                  const MatrixXd& B,
                                                  const MatrixXd& C) {
  // det [sI-A, B; C, 0] = 0 <=> generalized eigenvalue of (H, E) with
  // H = [A, -B; -C, 0], E = diag(I, 0).
  const int n = static_cast<int>(A.rows());
  const int mu = static_cast<int>(B.cols());
  const int py = static_cast<int>(C.rows());
  const int N = n + std::max(mu, py);
  MatrixXd H = MatrixXd::Zero(N, N);
  MatrixXd E = MatrixXd::Zero(N, N);
  H.topLeftCorner(n, n) = A;
  H.block(0, n, n, mu) = -B;
  H.block(n, 0, py, n) = -C;
  E.topLeftCorner(n, n) = MatrixXd::Identity(n, n);
  Eigen::GeneralizedEigenSolver<MatrixXd> ges(H, E, false);
  std::vector<std::complex<double>> zeros;
  const double tol = 1e-10 * std::max(1.0, H.norm());
  for (int i = 0; i < N; ++i) {
    const std::complex<double> alpha = ges.alphas()(i);
    const double beta = ges.betas()(i);
    if (std::abs(beta) > tol) zeros.push_back(alpha / beta);
  }
  return zeros;
}

}  // namespace sandwave::la

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

// Small dense linear-algebra helpers shared by the model / controller layers:
// matrix exponential, Hurwitz tests, characteristic / SISO transfer
// polynomials (Faddeev-LeVerrier), polynomial roots, PBH rank tests and
// invariant zeros of (A,B,C) triples.

namespace sandwave::la {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

MatrixXd expm(const MatrixXd& A);

double max_real_eig(const MatrixXd& A);

// Strict Hurwitz test: every eigenvalue satisfies Re(lambda) < -margin.
bool is_hurwitz(const MatrixXd& A, double margin = 1e-9);

// Characteristic polynomial det(sI - A), ascending coefficients, monic.
VectorXd char_poly(const MatrixXd& A);

// Numerator polynomial C adj(sI - A) B of the SISO transfer
// C (sI - A)^{-1} B (degree <= n-1), ascending coefficients.
VectorXd siso_numerator(const MatrixXd& A, const VectorXd& B, const RowVectorXd& C);

std::complex<double> eval_poly(const VectorXd& ascending, std::complex<double> s);

// Roots via companion-matrix eigenvalues; trailing (near-)zero leading
// coefficients are trimmed first.
std::vector<std::complex<double>> poly_roots(const VectorXd& ascending);

// PBH tests applied at every eigenvalue with Re(lambda) >= -margin.
bool pbh_stabilizable(const MatrixXd& A, const MatrixXd& B, double margin = 1e-9);
bool pbh_detectable(const MatrixXd& A, const MatrixXd& C, double margin = 1e-9);

// Finite invariant zeros of the Rosenbrock pencil [sI-A, B; C, 0]
// (zero feedthrough). Infinite pencil eigenvalues are discarded.
std::vector<std::complex<double>> invariant_zeros(const MatrixXd& A,
                                                  const MatrixXd& B,
                                                  const MatrixXd& C);

}  // namespace sandwave::la

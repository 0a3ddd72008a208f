#pragma once

#include <string>
#include <vector>

#include "sandwave/grids.hpp"
#include "sandwave/model.hpp"

// ============================================================================
// Backstepping kernels on the triangle D = {0 <= x <= y <= 1}.
//
// Observer side (psi, phi, K1):
//   psi(x,x) = c2/(q1+q2)
//   p psi(0,y) - phi(0,y) = C0 K1(y)
//   -q1 psi_y + q2 psi_x - (c2-c1) psi - c2 phi = 0
//   -q1 phi_x - q1 phi_y - c1 psi = 0
//   q1 K1'(y) = (A0 + c1 I) K1(y) - E0 psi(0,y),  K1(0) = L0/q1
// plus the inverse-map kernels
//   barM(x,y) = int_x^y phi(x,d) barM(d,y) dd - c1 phi(x,y)
//   barN(x,y) = int_x^y psi(x,d) barM(d,y) dd - c1 psi(x,y).
//
// Controller side (K3, J3, gamma and K2, J2, lambda):
//   q1 K3(x,1) = q2 q J3(x,1) + gamma(x) B1
//   J3(x,x) = c1/(q1+q2)
//   -q1 J3_x + q2 J3_y + (c2-c1) J3 + c1 K3 = 0
//   -q1 K3_x - q1 K3_y + c2 J3 = 0
//   q1 gamma' + gamma (A1 + c1 I) + q2 J3(x,1) C1 = 0,  gamma(1) = -F1
//   q2 q J2(x,1) = q1 K2(x,1) - lambda(x) B1
//   K2(x,x) = -c2/(q1+q2)
//   q2 J2_x + q2 J2_y + c1 K2 = 0
//   q2 K2_x - q1 K2_y + (c1-c2) K2 + c2 J2 = 0
//   q2 lambda' - lambda (A1 + c2 I) - q2 J2(x,1) C1 = 0,
//   lambda(1) = q gamma(1) + C1
// together with the boundary gain integrals barK1..barK6 and the synthesis
// quantities N1, N2, Malpha, Mbeta, MY entering the state-estimate ODE.
//
// Everything is solved by successive approximation of the equivalent
// integral equations along characteristics (trapezoid path quadrature,
// piecewise-linear interpolation), iterated to a fixed point.
// ============================================================================

namespace sandwave {

struct KernelOptions {
  int N = 100;           // triangle lattice resolution
  double tol = 1e-10;    // sup-norm change per sweep, relative to field scale
  int max_iter = 200;
};

struct ObserverKernels {
  TriGrid psi, phi;
  LineGrid K1;          // dim n, sampled on the y-grid
  TriGrid barM, barN;
  int iterations = 0;   // sweeps to reach the fixed point
  int N() const { return psi.N(); }
};

struct ControllerKernels {
  TriGrid K3, J3, K2, J2;
  LineGrid gamma, lambda;     // dim m row functions, sampled on the x-grid
  LineGrid barK1, barK2;      // scalar
  RowVectorXd barK3;          // 1 x m
  LineGrid barK4, barK5;      // dim n
  MatrixXd barK6;             // n x m
  LineGrid Malpha, Mbeta;     // dim n
  VectorXd N1, N2;            // n
  MatrixXd MY;                // n x m
  int iterations = 0;
  int N() const { return K3.N(); }
};

ObserverKernels solve_observer_kernels(const SandwichParams& sp,
                                       const GainSet& gains,
                                       const KernelOptions& opt = {});

ControllerKernels solve_controller_kernels(const SandwichParams& sp,
                                           const GainSet& gains,
                                           const KernelOptions& opt = {});

// Named sup-norm defect of every kernel equation, evaluated directly on the
// stored grids with centered differences (second order in the interior,
// matching one-sided stencils at line ends). Traces enforced exactly by the
// solver come out at roundoff; differential residuals shrink like O(h).
struct KernelResidual {
  std::string name;
  double value;
};

std::vector<KernelResidual> observer_kernel_residuals(
    const ObserverKernels& k, const SandwichParams& sp, const GainSet& gains);

std::vector<KernelResidual> controller_kernel_residuals(
    const ControllerKernels& k, const SandwichParams& sp, const GainSet& gains);

// Worst entry, for quick pass/fail summaries.
double max_residual(const std::vector<KernelResidual>& r);

}  // namespace sandwave

#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

// ============================================================================
// Model layer: the abstract ODE -- 2x2 hyperbolic PDE -- ODE "sandwich" data,
// the deepwater-vessel physical parameter set and its reduction to sandwich
// form, Riemann-variable maps, and the admissibility checks that every
// downstream stage (kernel solve, synthesis, simulation) relies on.
//
// Convention used throughout the library: the PDE lives on the unit interval
// x in [0,1] with transport speeds q1, q2 in 1/s (physical speed / domain
// length), so all times are in seconds and field values keep physical units.
// ============================================================================

namespace sandwave {

using Eigen::ArrayXd;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

// ----------------------------------------------------------------------------
// Error taxonomy. The CLI maps these onto process exit codes:
//   ConfigError -> 1 (bad input), AssumptionError -> 2 (gain admissibility),
//   SynthesisError -> 3 (filter design infeasible), NumericalError -> 4.
// ----------------------------------------------------------------------------
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};
struct AssumptionError : std::runtime_error {
  explicit AssumptionError(const std::string& msg) : std::runtime_error(msg) {}
};
struct SynthesisError : std::runtime_error {
  explicit SynthesisError(const std::string& msg) : std::runtime_error(msg) {}
};
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// ----------------------------------------------------------------------------
// Sandwich system
//
//   Xdot = A0 X + E0 w(0,t) + B0 U
//   z(0,t) = p w(0,t) + C0 X
//   z_t = -q1 z_x - c1 w - c1 z
//   w_t =  q2 w_x - c2 w - c2 z          on x in [0,1]
//   w(1,t) = q z(1,t) + C1 Y
//   Ydot = A1 Y + B1 z(1,t)
//   y_out(t) = C1 Y(t - tau)
// ----------------------------------------------------------------------------
struct SandwichParams {
  MatrixXd A0;     // n x n proximal ODE matrix
  VectorXd E0;     // n     proximal coupling to w(0,t)
  VectorXd B0;     // n     control input vector
  RowVectorXd C0;  // 1 x n proximal output row
  MatrixXd A1;     // m x m distal ODE matrix
  VectorXd B1;     // m     distal coupling to z(1,t)
  RowVectorXd C1;  // 1 x m distal (sensed) output row
  double p = 0.0;  // reflection coefficient at x = 0
  double q = 0.0;  // reflection coefficient at x = 1
  double q1 = 0.0; // rightward transport speed, 1/s
  double q2 = 0.0; // leftward transport speed, 1/s
  double c1 = 0.0; // damping coupling in the z equation, 1/s
  double c2 = 0.0; // damping coupling in the w equation, 1/s
  double tau = 0.0; // sensor delay, s

  int n() const { return static_cast<int>(A0.rows()); }
  int m() const { return static_cast<int>(A1.rows()); }

  // Throws ConfigError on dimension mismatches or inadmissible scalars
  // (q1, q2 must be positive; q must be nonzero; tau nonnegative).
  void validate() const;

  // Moore-Penrose right inverse of C0 (n x 1 for the row-vector C0).
  VectorXd C0_pinv() const;
};

// Observer and state-feedback gain choices layered on SandwichParams.
struct GainSet {
  VectorXd L0;     // n     proximal observer gain
  VectorXd L1;     // m     distal observer gain
  RowVectorXd F0;  // 1 x n proximal feedback row
  RowVectorXd F1;  // 1 x m distal feedback row
};

// Closed-loop matrices derived from a gain choice. Gamma1 = e^{tau A1} L1 is
// the distal injection actually applied by the observer.
MatrixXd obs_A0(const SandwichParams& sp, const GainSet& g);   // A0 - L0 C0
MatrixXd obs_A1(const SandwichParams& sp, const GainSet& g);   // A1 - Gamma1 C1 e^{-tau A1}
MatrixXd ctrl_A0(const SandwichParams& sp, const GainSet& g);  // A0 - B0 F0
MatrixXd ctrl_A1(const SandwichParams& sp, const GainSet& g);  // A1 - B1 F1
VectorXd gamma1(const SandwichParams& sp, const GainSet& g);   // e^{tau A1} L1

// ----------------------------------------------------------------------------
// Deepwater construction vessel (DCV): a crane vessel lowering a payload on a
// long cable. Values default to the case-study table.
// ----------------------------------------------------------------------------
struct DcvPhysicalParams {
  double L = 1000.0;      // cable length, m
  double R_D = 0.2;       // cable diameter, m
  double E_young = 4e9;   // cable Young's modulus, N/m^2 (not used by the
                          //   taut-string reduction; kept for completeness)
  double rho = 8.02;      // cable linear density, kg/m
  double M0 = 1e6;        // vessel/crane equivalent mass, kg
  double ML = 4e5;        // payload mass, kg
  double g = 9.8;         // gravity, m/s^2
  double d_c = 0.5;       // cable distributed damping, N*s/m^2
  double h_c = 10.0;      // payload height, m
  double D_c = 5.0;       // payload diameter, m
  double d_L = 2e5;       // payload damping, N*s/m
  double d_0 = 8e5;       // crane damping, N*s/m
  double rho_s = 1024.0;  // seawater density, kg/m^3
  double tau = 0.1;       // sensor transmission delay, s

  static DcvPhysicalParams table1() { return DcvPhysicalParams{}; }

  // Payload buoyancy (pi/4 D_c^2 h_c rho_s g), N.
  double buoyancy() const;
  // Static cable tension at the payload: ML g - buoyancy, N.
  double tension() const;
  // Transverse wave speed sqrt(T0 / rho), m/s.
  double wave_speed() const;
  // sqrt(T0 * rho), the wave impedance, N*s/m.
  double impedance() const;
};

// Reduce the DCV model to sandwich form (n = m = 1):
//   A0 = -(d_0 + sqrt(T0 rho))/M0, E0 = sqrt(T0 rho)/M0, B0 = 1/M0, C0 = 2
//   A1 = (-d_L + sqrt(T0 rho))/ML, B1 = -sqrt(T0 rho)/ML, C1 = 2
//   p = q = -1, q1 = q2 = v_w/L, c1 = c2 = d_c/(2 rho).
SandwichParams derive_sandwich_from_dcv(const DcvPhysicalParams& dcv);

// ----------------------------------------------------------------------------
// Riemann variables: z = u_t - v_w u_x, w = u_t + v_w u_x and the inverse
// u_t = (z + w)/2, u_x = (w - z)/(2 v_w).
// ----------------------------------------------------------------------------
void riemann_forward(const ArrayXd& ut, const ArrayXd& ux, double v_w,
                     ArrayXd& z, ArrayXd& w);
void riemann_inverse(const ArrayXd& z, const ArrayXd& w, double v_w,
                     ArrayXd& ut, ArrayXd& ux);

// ----------------------------------------------------------------------------
// Admissibility checks.
// ----------------------------------------------------------------------------
struct AssumptionCheck {
  std::string name;
  bool pass = false;
  double value = 0.0;  // the measured quantity backing the verdict
  std::string detail;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;
  bool all_pass() const;
  const AssumptionCheck& find(const std::string& name) const;  // throws if absent
  std::string summary() const;
};

// Runs, in order:
//   reflection_bound      |pq| < e^{c2/q2 + c1/q1}, q != 0
//   proximal_stabilizable PBH on (A0, B0)
//   proximal_detectable   PBH on (A0, C0)
//   distal_detectable     PBH on (A1, C1 e^{-tau A1})
//   proximal_zeros        invariant zeros of (A0,B0,C0) strictly stable
//   distal_zeros          invariant zeros of (A1,B1,C1 e^{-tau A1}) strictly stable
//   obs_A0_hurwitz .. ctrl_A1_hurwitz   closed-loop spectra, margin 1e-9
AssumptionReport check_assumptions(const SandwichParams& sp, const GainSet& g);

// Scalar closed-form gain admissibility bounds, valid for n = m = 1 systems
// (throws ConfigError otherwise). Cross-checks the eigenvalue tests:
//   L0 > A0/2, L1 > A1/2, F0 > A0/B0 (B0>0), F1 < -A1/B1 (B1<0 sign handled).
struct ScalarGainBounds {
  double L0_min;  // obs_A0 Hurwitz  <=>  L0 > L0_min
  double L1_min;  // obs_A1 Hurwitz  <=>  L1 > L1_min
  double F0_min;  // ctrl_A0 Hurwitz <=>  F0 > F0_min   (assumes B0 > 0)
  double F1_max;  // ctrl_A1 Hurwitz <=>  F1 < F1_max   (assumes B1 < 0)
};
ScalarGainBounds scalar_gain_bounds(const SandwichParams& sp);

// Default gain choice used by the simulation harness. The distal feedback
// magnitude is deliberately moderate: the gain integrals downstream grow like
// exp(|F1 B1| / (q2 |q|)), so extreme F1 values are admissible in the
// eigenvalue sense yet numerically unusable.
GainSet default_dcv_gains();

}  // namespace sandwave

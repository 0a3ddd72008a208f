#pragma once

#include <Eigen/Dense>

// Shared advance step for the counter-propagating transport pair
//
//   z_t = -q1 z_x + Sz(x),   inflow at x = 0
//   w_t = +q2 w_x + Sw(x),   inflow at x = 1
//
// on the uniform unit-interval grid with M+1 nodes. The simulator and the
// state observer both advance their fields through this routine, so a
// zero-injection observer copy tracks the plant bitwise.
//
// New-time inflow values are affine in the new-time outflow partners,
//   z(0) = pz * w(0) + z0_affine,   w(1) = qw * z(1) + w1_affine,
// which covers both the plant boundary conditions and the observer's
// injection-augmented ones.

namespace sandwave {

enum class TransportScheme {
  // characteristic tracing with linear interpolation at the foot;
  // unconditionally stable, reduces to upwind exactly when CFL <= 1
  SemiLagrangian,
  // first-order explicit upwind; aborts when CFL > 1
  ExplicitUpwind,
};

struct TransportBC {
  double pz = 0.0;         // z(0) reflection of w(0)
  double z0_affine = 0.0;  // remainder of the z(0) relation at the new time
  double qw = 0.0;         // w(1) reflection of z(1)
  double w1_affine = 0.0;  // remainder of the w(1) relation at the new time
  double z0_old = 0.0;     // inflow values at the old time, used to place
  double w1_old = 0.0;     //   characteristics that entered mid-step
};

// Advances z and w in place by one step of size dt. Sz and Sw are the source
// terms frozen at the old time level (M+1 nodes each).
void advance_transport(Eigen::VectorXd& z, Eigen::VectorXd& w,
                       const Eigen::VectorXd& Sz, const Eigen::VectorXd& Sw,
                       double q1, double q2, double dt, TransportScheme scheme,
                       const TransportBC& bc);

}  // namespace sandwave

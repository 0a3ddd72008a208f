#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

#include "sandwave/filters.hpp"
#include "sandwave/model.hpp"
#include "sandwave/transport.hpp"

// Full simulated plant: the coupled transport pair with its boundary ODEs,
// the delayed sensor path, and the reconstructed physical cable quantities
// (displacement field, payload offset, oscillation energy). Ocean-current
// forcing is produced by a separate DisturbanceModel so the plant itself
// stays deterministic.

namespace sandwave {

struct PlantGrid {
  int M = 10000;                 // cells on the unit domain
  double dt = 1e-3;              // step, s
  TransportScheme scheme = TransportScheme::SemiLagrangian;

  void validate() const;
};

// Converts between the normalized fields and the physical cable: rho is the
// linear density (kg/m), ML the payload mass (kg), L the cable length (m).
struct PhysicalScales {
  double rho = 1.0;
  double ML = 1.0;
  double L = 1.0;

  static PhysicalScales from_dcv(const DcvPhysicalParams& ph) {
    return PhysicalScales{ph.rho, ph.ML, ph.L};
  }
};

struct Measurement {
  double y = 0.0;     // delayed sensed output C1 Y(t - tau)
  double ydot = 0.0;  // its delayed time derivative
};

class Plant {
 public:
  Plant(const SandwichParams& sp, const PlantGrid& grid,
        const PhysicalScales& scales = PhysicalScales{});

  // Overwrites the state with nodal samples of the given fields and resets
  // the clock, the sensor history, and the displacement field to zero.
  void set_initial(const Eigen::VectorXd& X0, const Eigen::VectorXd& Y0,
                   const Eigen::VectorXd& z0, const Eigen::VectorXd& w0);

  // Case-study start: z = 4 sin(pi x), w = 4 cos(pi x), X = 2, Y = -2
  // (boundary-consistent), zero displacement.
  void set_dcv_initial();

  // Advances one step. f_per_length holds the distributed transverse force
  // in N/m at the M+1 nodes (scaled internally by 1/rho); fL is the payload
  // drag in N (scaled by 1/ML, applied to the first distal ODE channel).
  void step(double U, const Eigen::VectorXd& f_per_length, double fL);
  void step_unforced(double U);  // no external forcing

  // Delayed sensor samples; identically zero for t < tau.
  Measurement measure() const;

  // Snapshot of the sensed-output history laid out on the delay segment:
  // node 0 is the sample entering the path this step, node K the sample
  // measure() is about to return. An observer initialized from this field
  // reproduces the plant measurement exactly.
  Eigen::VectorXd sensor_field() const;
  // Companion rate history; fL is the payload drag entering the pending
  // sample (zero when the plant runs unforced).
  Eigen::VectorXd sensor_rate_field(double fL = 0.0) const;

  // rho/8 ||w+z||^2 + rho/8 ||w-z||^2 over the physical cable, J.
  double energy() const;

  // Transverse displacement at the payload end, m.
  double bL() const { return u_[M_]; }

  double t() const { return t_; }
  int delay_steps() const { return K_; }
  const Eigen::VectorXd& X() const { return X_; }
  const Eigen::VectorXd& Y() const { return Y_; }
  const Eigen::VectorXd& z() const { return z_; }
  const Eigen::VectorXd& w() const { return w_; }
  const Eigen::VectorXd& displacement() const { return u_; }
  const SandwichParams& params() const { return sp_; }
  const PlantGrid& grid() const { return grid_; }

 private:
  void reset_sensor();
  Eigen::VectorXd Ydot(const Eigen::VectorXd& Y, double z1, double fL) const;

  SandwichParams sp_;
  PlantGrid grid_;
  PhysicalScales scales_;
  int M_ = 0;
  int K_ = 0;  // sensor delay in steps, round(tau/dt)

  Eigen::VectorXd X_, Y_, z_, w_, u_;
  DelayLine sensor_y_, sensor_yd_;
  double t_ = 0.0;
};

// ---------------------------------------------------------------------------
// Ocean-current disturbances: a clamped Gauss-Markov surface speed, a depth
// profile that holds full strength to 300 m then tapers to 10% at the cable
// end, an oscillating vortex-shedding drag on the cable, and a Morison drag
// on the payload cylinder.
// ---------------------------------------------------------------------------

struct DisturbanceParams {
  double sigma = 0.5;    // white-noise intensity, m s^-3/2
  double A_D = 400.0;    // drag amplitude knob; 400 is the baseline
  double P0 = 2.0;       // initial surface speed, m/s
  double P_min = 1.6;    // clamp band, m/s
  double P_max = 2.4;
  double C_d = 1.0;      // drag coefficient
  double S_t = 0.2;      // Strouhal number
  double phase = M_PI;   // phase angle of the oscillating drag
  std::uint64_t seed = 1;
};

class DisturbanceModel {
 public:
  DisturbanceModel(const DcvPhysicalParams& phys, const DisturbanceParams& dp);

  // Euler-Maruyama advance of the surface speed (drift-free), then clamp.
  void advance(double dt);

  double surface_speed() const { return P_; }

  // Depth-dependent current speed at physical depth x in [0, L], m/s.
  double current(double x) const;

  // Oscillating drag per unit length at depth x and time t, N/m. The
  // amplitude knob enters normalized by its baseline: A_D = 400 gives the
  // bare 1/2 rho_s C_d P^2 R_D prefactor.
  double drag_per_length(double x, double t) const;

  // Morison drag on the payload cylinder at the cable end, N.
  double payload_drag() const;

  // Samples drag_per_length at the M+1 nodes of the unit-domain grid.
  void fill_field(double t, Eigen::VectorXd& f) const;

 private:
  double gaussian();  // Box-Muller on the raw engine, compiler-independent

  DcvPhysicalParams phys_;
  DisturbanceParams dp_;
  std::mt19937_64 rng_;
  double P_ = 0.0;
};

}  // namespace sandwave

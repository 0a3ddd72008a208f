#include "sandwave/plant.hpp"

#include <cmath>

namespace sandwave {

namespace {

// One RK4 step of the affine system v' = A v + c with c frozen over the step.
Eigen::VectorXd rk4_affine(const Eigen::MatrixXd& A, const Eigen::VectorXd& c,
                           const Eigen::VectorXd& v, double dt) {
  const Eigen::VectorXd k1 = A * v + c;
  const Eigen::VectorXd k2 = A * (v + 0.5 * dt * k1) + c;
  const Eigen::VectorXd k3 = A * (v + 0.5 * dt * k2) + c;
  const Eigen::VectorXd k4 = A * (v + dt * k3) + c;
  return v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

void PlantGrid::validate() const {
  if (M < 2) throw ConfigError("transport grid needs at least two cells");
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
}

// ---------------------------------------------------------------------------
// Plant

Plant::Plant(const SandwichParams& sp, const PlantGrid& grid,
             const PhysicalScales& scales)
    : sp_(sp), grid_(grid), scales_(scales) {
  sp_.validate();
  grid_.validate();
  if (!(scales_.rho > 0.0) || !(scales_.ML > 0.0) || !(scales_.L > 0.0))
    throw ConfigError("physical scales must be positive");
  M_ = grid_.M;
  K_ = static_cast<int>(std::lround(sp_.tau / grid_.dt));
  X_ = Eigen::VectorXd::Zero(sp_.n());
  Y_ = Eigen::VectorXd::Zero(sp_.m());
  z_ = Eigen::VectorXd::Zero(M_ + 1);
  w_ = Eigen::VectorXd::Zero(M_ + 1);
  u_ = Eigen::VectorXd::Zero(M_ + 1);
  reset_sensor();
}

void Plant::reset_sensor() {
  if (K_ >= 1) {
    sensor_y_ = DelayLine(K_);
    sensor_yd_ = DelayLine(K_);
  }
  t_ = 0.0;
}

void Plant::set_initial(const Eigen::VectorXd& X0, const Eigen::VectorXd& Y0,
                        const Eigen::VectorXd& z0, const Eigen::VectorXd& w0) {
  if (X0.size() != sp_.n() || Y0.size() != sp_.m() || z0.size() != M_ + 1 ||
      w0.size() != M_ + 1)
    throw ConfigError("initial data does not match the plant dimensions");
  X_ = X0;
  Y_ = Y0;
  z_ = z0;
  w_ = w0;
  u_.setZero();
  reset_sensor();
}

void Plant::set_dcv_initial() {
  Eigen::VectorXd z0(M_ + 1), w0(M_ + 1);
  for (int i = 0; i <= M_; ++i) {
    const double x = double(i) / M_;
    z0[i] = 4.0 * std::sin(M_PI * x);
    w0[i] = 4.0 * std::cos(M_PI * x);
  }
  // boundary-consistent ODE states: z(0) = p w(0) + C0 X, w(1) = q z(1) + C1 Y
  Eigen::VectorXd X0 = sp_.C0_pinv() * (z0[0] - sp_.p * w0[0]);
  Eigen::VectorXd Y0 = sp_.C1.transpose() *
                       ((w0[M_] - sp_.q * z0[M_]) / sp_.C1.squaredNorm());
  set_initial(X0, Y0, z0, w0);
}

Eigen::VectorXd Plant::Ydot(const Eigen::VectorXd& Y, double z1,
                            double fL) const {
  Eigen::VectorXd d = sp_.A1 * Y + sp_.B1 * z1;
  d[0] += fL / scales_.ML;
  return d;
}

void Plant::step(double U, const Eigen::VectorXd& f_per_length, double fL) {
  if (f_per_length.size() != M_ + 1)
    throw ConfigError("forcing field does not match the plant grid");

  // sensor samples for the current time level enter the delay path first
  if (K_ >= 1) {
    sensor_y_.push(sp_.C1.dot(Y_));
    sensor_yd_.push(sp_.C1.dot(Ydot(Y_, z_[M_], fL)));
  }

  // boundary ODEs with the field couplings frozen at the old time level
  const double w0_old = w_[0], z1_old = z_[M_];
  const Eigen::VectorXd Xn = rk4_affine(
      sp_.A0, sp_.E0 * w0_old + sp_.B0 * U, X_, grid_.dt);
  Eigen::VectorXd cy = sp_.B1 * z1_old;
  cy[0] += fL / scales_.ML;
  const Eigen::VectorXd Yn = rk4_affine(sp_.A1, cy, Y_, grid_.dt);

  const Eigen::VectorXd ut_old = 0.5 * (z_ + w_);

  Eigen::VectorXd Sz = -sp_.c1 * (z_ + w_) + f_per_length / scales_.rho;
  Eigen::VectorXd Sw = -sp_.c2 * (z_ + w_) + f_per_length / scales_.rho;

  TransportBC bc;
  bc.pz = sp_.p;
  bc.z0_affine = sp_.C0.dot(Xn);
  bc.qw = sp_.q;
  bc.w1_affine = sp_.C1.dot(Yn);
  bc.z0_old = z_[0];
  bc.w1_old = w_[M_];
  advance_transport(z_, w_, Sz, Sw, sp_.q1, sp_.q2, grid_.dt, grid_.scheme, bc);

  u_ += 0.5 * grid_.dt * (ut_old + 0.5 * (z_ + w_));
  X_ = Xn;
  Y_ = Yn;
  t_ += grid_.dt;

  if (!z_.allFinite() || !w_.allFinite() || !X_.allFinite() || !Y_.allFinite())
    throw NumericalError("plant state lost finiteness at t = " +
                         std::to_string(t_));
}

void Plant::step_unforced(double U) {
  step(U, Eigen::VectorXd::Zero(M_ + 1), 0.0);
}

Measurement Plant::measure() const {
  if (K_ == 0)  // no delay path configured: read the sensor directly
    return Measurement{sp_.C1.dot(Y_), sp_.C1.dot(sp_.A1 * Y_ + sp_.B1 * z_[M_])};
  return Measurement{sensor_y_[K_ - 1], sensor_yd_[K_ - 1]};
}

Eigen::VectorXd Plant::sensor_field() const {
  Eigen::VectorXd v(K_ + 1);
  v[0] = sp_.C1.dot(Y_);
  for (int j = 1; j <= K_; ++j) v[j] = sensor_y_[j - 1];
  return v;
}

Eigen::VectorXd Plant::sensor_rate_field(double fL) const {
  Eigen::VectorXd v(K_ + 1);
  v[0] = sp_.C1.dot(Ydot(Y_, z_[M_], fL));
  for (int j = 1; j <= K_; ++j) v[j] = sensor_yd_[j - 1];
  return v;
}

double Plant::energy() const {
  double acc = 0.0;
  for (int i = 0; i <= M_; ++i) {
    const double s = w_[i] + z_[i], d = w_[i] - z_[i];
    const double val = s * s + d * d;
    acc += (i == 0 || i == M_) ? 0.5 * val : val;
  }
  return scales_.rho * scales_.L / 8.0 * acc / M_;
}

// ---------------------------------------------------------------------------
// DisturbanceModel

DisturbanceModel::DisturbanceModel(const DcvPhysicalParams& phys,
                                   const DisturbanceParams& dp)
    : phys_(phys), dp_(dp), rng_(dp.seed) {
  if (!(dp_.P_min <= dp_.P_max))
    throw ConfigError("current-speed clamp band is empty");
  P_ = std::min(std::max(dp_.P0, dp_.P_min), dp_.P_max);
}

double DisturbanceModel::gaussian() {
  // Box-Muller on raw 53-bit draws keeps seeded runs identical across
  // standard libraries (std::normal_distribution is not pinned down).
  const double u1 =
      1.0 - double(rng_() >> 11) * (1.0 / 9007199254740992.0);  // (0, 1]
  const double u2 = double(rng_() >> 11) * (1.0 / 9007199254740992.0);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

void DisturbanceModel::advance(double dt) {
  P_ += dp_.sigma * std::sqrt(dt) * gaussian();
  P_ = std::min(std::max(P_, dp_.P_min), dp_.P_max);
}

double DisturbanceModel::current(double x) const {
  x = std::min(std::max(x, 0.0), phys_.L);
  if (x <= 300.0) return P_;
  return (970.0 - 0.9 * x) / 700.0 * P_;
}

double DisturbanceModel::drag_per_length(double x, double t) const {
  const double Pl = current(x);
  const double amp =
      0.5 * phys_.rho_s * dp_.C_d * Pl * Pl * phys_.R_D * (dp_.A_D / 400.0);
  return amp * std::cos(4.0 * M_PI * dp_.S_t * Pl / phys_.R_D * t + dp_.phase);
}

double DisturbanceModel::payload_drag() const {
  const double Pl = current(phys_.L);
  return 0.5 * dp_.C_d * phys_.rho_s * phys_.h_c * phys_.D_c * std::abs(Pl) * Pl;
}

void DisturbanceModel::fill_field(double t, Eigen::VectorXd& f) const {
  const int M = static_cast<int>(f.size()) - 1;
  for (int i = 0; i <= M; ++i)
    f[i] = drag_per_length(double(i) / M * phys_.L, t);
}

}  // namespace sandwave

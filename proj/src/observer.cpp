#include "sandwave/observer.hpp"

#include <cmath>
#include <string>

#include "sandwave/linalg.hpp"

namespace sandwave {

namespace {

// One RK4 step of the affine system v' = A v + c with c frozen over the step.
// Mirrors the plant integrator so an exactly initialized observer reproduces
// the plant trajectory to roundoff.
Eigen::VectorXd rk4_affine(const Eigen::MatrixXd& A, const Eigen::VectorXd& c,
                           const Eigen::VectorXd& v, double dt) {
  const Eigen::VectorXd k1 = A * v + c;
  const Eigen::VectorXd k2 = A * (v + 0.5 * dt * k1) + c;
  const Eigen::VectorXd k3 = A * (v + 0.5 * dt * k2) + c;
  const Eigen::VectorXd k4 = A * (v + dt * k3) + c;
  return v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Second-order finite-difference derivative on a uniform grid of spacing h.
Eigen::VectorXd fd_derivative(const Eigen::VectorXd& f, double h) {
  const int M = static_cast<int>(f.size()) - 1;
  Eigen::VectorXd d(M + 1);
  d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
  for (int i = 1; i < M; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
  d[M] = (3.0 * f[M] - 4.0 * f[M - 1] + f[M - 2]) / (2.0 * h);
  return d;
}

}  // namespace

// ---------------------------------------------------------------------------
// InjectionFilterBank
// ---------------------------------------------------------------------------

InjectionFilterBank::Outputs InjectionFilterBank::step(double ytil,
                                                       double dytil) {
  rate_state_ = rate_pole_ * rate_state_ + (1.0 - rate_pole_) * dytil;
  Outputs out;
  out.ur = a_ * rate_state_ + b_ * ytil;
  if (has_tail_) out.ur += tail_.step(ytil);
  out.h4 = q * out.ur + h4_block_.step(ytil);
  return out;
}

void InjectionFilterBank::reset() {
  rate_state_ = 0.0;
  if (has_tail_) tail_.reset();
  h4_block_.reset();
}

std::complex<double> InjectionFilterBank::core_response(double w) const {
  std::complex<double> r(b_, a_ * w);
  if (has_tail_) r += tail_.freq_response(w);
  return r;
}

std::complex<double> InjectionFilterBank::inv_r_exact(double w) const {
  const std::complex<double> s(0.0, w);
  return la::eval_poly(den_, s) / la::eval_poly(num_, s);
}

InjectionFilterBank build_injection_filters(const SandwichParams& sp,
                                            const GainSet& gains,
                                            const ObserverKernels& ok,
                                            int M, int K, double dt) {
  if (K < 1)
    throw ConfigError("sensor delay must span at least one time step");
  if (M < 2) throw ConfigError("transport grid needs at least two cells");
  const int m = static_cast<int>(sp.m());

  const Eigen::MatrixXd Abar1 = obs_A1(sp, gains);
  if (!la::is_hurwitz(Abar1))
    throw AssumptionError(
        "distal observer loop A1 - Gamma1 C1 e^{-tau A1} is not Hurwitz; "
        "pick L1 inside the admissible band");

  InjectionFilterBank bank;
  bank.q = sp.q;
  bank.Gamma1 = gamma1(sp, gains);

  // r(s) = C1 e^{-tau A1} (sI - Abar1)^{-1} B1 as a coefficient ratio.
  const Eigen::MatrixXd Eneg = la::expm(-sp.tau * sp.A1);
  const Eigen::RowVectorXd C1e = sp.C1 * Eneg;
  bank.den_ = la::char_poly(Abar1);                    // degree m, monic
  bank.num_ = la::siso_numerator(Abar1, sp.B1, C1e);   // degree <= m-1
  const double lead = bank.num_[m - 1];
  const double scale = bank.num_.cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || std::abs(lead) < 1e-12 * scale)
    throw SynthesisError(
        "innovation-to-wave channel loses its relative degree; the "
        "measurement cannot be inverted as a rate-plus-proportional filter");
  bank.r0_ = bank.num_[0] / bank.den_[0];

  // The zeros of r become the poles of the shared core; all must be stable.
  if (bank.num_.size() >= 2) {
    bank.tail_poles_ = la::poly_roots(bank.num_);
    for (const auto& z : bank.tail_poles_)
      if (z.real() >= 0.0)
        throw SynthesisError(
            "the innovation channel has a nonminimum-phase zero at Re = " +
            std::to_string(z.real()) + "; its inverse would be unstable");
  }

  // |r(jw)| audit over four decades; a vanishing response anywhere on the
  // grid means the inversion is ill conditioned at reachable frequencies.
  double rmin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 2000; ++k) {
    const double w = std::pow(10.0, -4.0 + 8.0 * k / 1999.0);
    rmin = std::min(rmin, std::abs(1.0 / bank.inv_r_exact(w)));
  }
  if (!(rmin >= 1e-12))
    throw SynthesisError("|r(jw)| drops below 1e-12 on the audit grid");

  // Long division 1/r = a s + b + rem(s)/num(s) with strictly proper rem.
  bank.a_ = 1.0 / lead;  // den is monic
  Eigen::VectorXd d1 = bank.den_;
  for (int i = 1; i <= m; ++i) d1[i] -= bank.a_ * bank.num_[i - 1];
  bank.b_ = d1[m - 1] / lead;
  Eigen::VectorXd rem = d1.head(m) - bank.b_ * bank.num_;
  bank.has_tail_ = m >= 2 && rem.head(m - 1).cwiseAbs().maxCoeff() >
                                 1e-12 * bank.den_.cwiseAbs().maxCoeff();
  if (bank.has_tail_)
    bank.tail_ = BilinearSiso(rem.head(m - 1), bank.num_, dt);

  // Proper boundary block C1 (sI - Abar1)^{-1} B1 / r(s): ratio of the two
  // output numerators over the shared denominator.
  const Eigen::VectorXd num2 = la::siso_numerator(Abar1, sp.B1, sp.C1);
  bank.h4_block_ = BilinearSiso(num2, bank.num_, dt);

  // Static gain profiles.
  const int Nk = ok.K1.N();
  bank.g1 = sp.q1 * ok.K1.col(Nk);
  bank.g2.resize(M + 1);
  bank.g3.resize(M + 1);
  for (int i = 0; i <= M; ++i) {
    const double x = static_cast<double>(i) / M;
    bank.g2[i] = -sp.q1 * ok.phi.interp(x, 1.0);
    bank.g3[i] = -sp.q1 * ok.psi.interp(x, 1.0);
  }
  // Delay-segment profiles C1 e^{-tau A1 (x-1)} {Gamma1, B1} at the K+1
  // nodes, built by repeated multiplication with one exact substep.
  bank.g5y.resize(K + 1);
  bank.g5u.resize(K + 1);
  const Eigen::MatrixXd Estep = la::expm(-(sp.tau / K) * sp.A1);
  Eigen::RowVectorXd row = sp.C1;
  for (int j = 0; j <= K; ++j) {
    bank.g5y[j] = row.dot(bank.Gamma1);
    bank.g5u[j] = row.dot(sp.B1);
    if (j < K) row = row * Estep;
  }
  return bank;
}

// ---------------------------------------------------------------------------
// Observer
// ---------------------------------------------------------------------------

Observer::Observer(const SandwichParams& sp, const GainSet& gains,
                   const ObserverKernels& ok, const PlantGrid& grid)
    : sp_(sp), grid_(grid) {
  sp_.validate();
  grid_.validate();
  M_ = grid_.M;
  K_ = static_cast<int>(std::lround(sp_.tau / grid_.dt));
  bank_ = build_injection_filters(sp_, gains, ok, M_, K_, grid_.dt);
  set_initial(Eigen::VectorXd::Zero(sp_.n()), Eigen::VectorXd::Zero(sp_.m()),
              Eigen::VectorXd::Zero(M_ + 1), Eigen::VectorXd::Zero(M_ + 1));
}

void Observer::set_initial(const VectorXd& Xhat0, const VectorXd& Yhat0,
                           const VectorXd& zhat0, const VectorXd& what0) {
  if (Xhat0.size() != sp_.n() || Yhat0.size() != sp_.m() ||
      zhat0.size() != M_ + 1 || what0.size() != M_ + 1)
    throw ConfigError("initial data does not match the observer dimensions");
  Xhat_ = Xhat0;
  Yhat_ = Yhat0;
  zhat_ = zhat0;
  what_ = what0;
  // Delay segment: empty history, current samples waiting at the inlet. The
  // Gamma1 share of the rate sample is added once the first innovation is
  // known, matching how each later inlet sample is completed.
  vhat_ = Eigen::VectorXd::Zero(K_ + 1);
  vhat_[0] = sp_.C1.dot(Yhat_);
  vdhat_ = Eigen::VectorXd::Zero(K_ + 1);
  vdhat_[0] = sp_.C1.dot(sp_.A1 * Yhat_ + sp_.B1 * zhat_[M_]);
  vdep_ = Eigen::VectorXd::Zero(K_ + 1);
  vdep_out_prev_ = 0.0;
  bank_.reset();
  t_ = 0.0;
  last_ = InjectionSample{};
}

void Observer::match(const Plant& plant) {
  if (plant.grid().M != M_ || plant.grid().dt != grid_.dt ||
      plant.delay_steps() != K_)
    throw ConfigError("plant and observer grids differ");
  Xhat_ = plant.X();
  Yhat_ = plant.Y();
  zhat_ = plant.z();
  what_ = plant.w();
  vhat_ = plant.sensor_field();
  vdhat_ = plant.sensor_rate_field();
  vdep_ = Eigen::VectorXd::Zero(K_ + 1);
  vdep_out_prev_ = 0.0;
  bank_.reset();
  t_ = plant.t();
  last_ = InjectionSample{};
}

void Observer::step(double U, const Measurement& m) {
  const double dt = grid_.dt;

  // Innovation against the segment outlet, read before any update. The rate
  // read blends the transported inlet rate with a share of the outlet's own
  // deposit rate; the share stays below one because the full deposit rate
  // returns the channel's output with unit feedthrough (a singular loop).
  const double ytil = m.y - vhat_[K_];
  const double dep_rate = (vdep_[K_] - vdep_out_prev_) / dt;
  vdep_out_prev_ = vdep_[K_];
  const double dytil =
      m.ydot - vdhat_[K_] - bank_.rate_comp() * dep_rate;
  // Complete the pending inlet rate sample with its innovation share.
  vdhat_[0] += sp_.C1.dot(bank_.Gamma1) * ytil;

  const InjectionFilterBank::Outputs inj = bank_.step(ytil, dytil);

  // Boundary ODEs with field couplings frozen at the old time level.
  const double w0_old = what_[0], z1_old = zhat_[M_];
  const Eigen::VectorXd Xn = rk4_affine(
      sp_.A0, sp_.E0 * w0_old + sp_.B0 * U + bank_.g1 * inj.ur, Xhat_, dt);
  const Eigen::VectorXd cy = sp_.B1 * z1_old + bank_.Gamma1 * ytil;
  const Eigen::VectorXd Yn = rk4_affine(sp_.A1, cy, Yhat_, dt);

  Eigen::VectorXd Sz =
      -sp_.c1 * (zhat_ + what_) + (bank_.g2 * inj.ur).matrix();
  Eigen::VectorXd Sw =
      -sp_.c2 * (zhat_ + what_) + (bank_.g3 * inj.ur).matrix();

  TransportBC bc;
  bc.pz = sp_.p;
  bc.z0_affine = sp_.C0.dot(Xn);
  bc.qw = sp_.q;
  bc.w1_affine = sp_.C1.dot(Yn) + inj.h4;
  bc.z0_old = zhat_[0];
  bc.w1_old = what_[M_];
  advance_transport(zhat_, what_, Sz, Sw, sp_.q1, sp_.q2, dt, grid_.scheme,
                    bc);

  // Delay segment: the characteristic crosses exactly one node per step, so
  // the shift is exact and each hop accumulates its local deposit. The rate
  // line transports the inlet rate alone; the deposits are accumulated on
  // their own line so the outlet's deposit rate can be read one step behind.
  double h5_sup = 0.0;
  for (int j = K_; j >= 1; --j) {
    const double h5 = bank_.g5y[j] * ytil - bank_.g5u[j] * inj.ur;
    vhat_[j] = vhat_[j - 1] + dt * h5;
    vdep_[j] = vdep_[j - 1] + dt * h5;
    vdhat_[j] = vdhat_[j - 1];
    h5_sup = std::max(h5_sup, std::abs(h5));
  }
  vhat_[0] = sp_.C1.dot(Yn);
  vdep_[0] = 0.0;
  vdhat_[0] = sp_.C1.dot(sp_.A1 * Yn + sp_.B1 * zhat_[M_]);
  h5_sup = std::max(
      h5_sup, std::abs(bank_.g5y[0] * ytil - bank_.g5u[0] * inj.ur));

  Xhat_ = Xn;
  Yhat_ = Yn;
  t_ += dt;

  if (!zhat_.allFinite() || !what_.allFinite() || !Xhat_.allFinite() ||
      !Yhat_.allFinite() || !vhat_.allFinite())
    throw NumericalError("observer state lost finiteness at t = " +
                         std::to_string(t_));

  last_.ytil = ytil;
  last_.dytil = dytil;
  last_.ur = inj.ur;
  last_.h1_norm = bank_.g1.norm() * std::abs(inj.ur);
  last_.h2_sup = bank_.g2.abs().maxCoeff() * std::abs(inj.ur);
  last_.h3_sup = bank_.g3.abs().maxCoeff() * std::abs(inj.ur);
  last_.h4 = inj.h4;
  last_.h5_sup = h5_sup;
}

// ---------------------------------------------------------------------------
// Error-coordinate diagnostics
// ---------------------------------------------------------------------------

ErrorSnapshot error_snapshot(const Plant& plant, const Observer& obs) {
  if (plant.grid().M != obs.grid().M || plant.grid().dt != obs.grid().dt ||
      plant.delay_steps() != obs.delay_steps())
    throw ConfigError("plant and observer grids differ");
  ErrorSnapshot e;
  e.Xt = plant.X() - obs.Xhat();
  e.Yt = plant.Y() - obs.Yhat();
  e.zt = plant.z() - obs.zhat();
  e.wt = plant.w() - obs.what();
  e.vt = plant.sensor_field() - obs.vhat();
  e.t = plant.t();
  return e;
}

TargetFields to_target(const ErrorSnapshot& e, const ObserverKernels& ok,
                       const SandwichParams& sp) {
  const int M = static_cast<int>(e.zt.size()) - 1;
  const int K = static_cast<int>(e.vt.size()) - 1;
  const double h = 1.0 / M;
  TargetFields f;
  f.t = e.t;

  // alpha from the Volterra relation zt = alpha - int_x^1 phi alpha by
  // back-substitution from the regular end x = 1.
  f.alpha.resize(M + 1);
  f.alpha[M] = e.zt[M];
  for (int i = M - 1; i >= 0; --i) {
    const double x = static_cast<double>(i) / M;
    double acc = 0.5 * ok.phi.interp(x, 1.0) * f.alpha[M];
    for (int j = i + 1; j < M; ++j)
      acc += ok.phi.interp(x, static_cast<double>(j) / M) * f.alpha[j];
    const double diag = 0.5 * h * ok.phi.interp(x, x);
    f.alpha[i] = (e.zt[i] + h * acc) / (1.0 - diag);
  }

  // beta and Z by direct quadrature.
  f.beta.resize(M + 1);
  for (int i = 0; i <= M; ++i) {
    const double x = static_cast<double>(i) / M;
    double acc = 0.0;
    for (int j = i; j <= M; ++j) {
      double wgt = (j == i || j == M) ? 0.5 : 1.0;
      if (i == M) wgt = 0.0;
      acc += wgt * ok.psi.interp(x, static_cast<double>(j) / M) * f.alpha[j];
    }
    f.beta[i] = e.wt[i] + h * acc;
  }
  Eigen::VectorXd ZK = Eigen::VectorXd::Zero(e.Xt.size());
  for (int j = 0; j <= M; ++j)
    ZK += trap_weight(j, M) * ok.K1.interp(static_cast<double>(j) / M) *
          f.alpha[j];
  f.Z = e.Xt - ZK;

  // eta = vt - C1 e^{-tau A1 (x-1)} Yt on the delay segment.
  f.eta.resize(K + 1);
  const Eigen::MatrixXd Estep = la::expm(-(sp.tau / K) * sp.A1);
  Eigen::RowVectorXd row = sp.C1;
  for (int j = 0; j <= K; ++j) {
    f.eta[j] = e.vt[j] - row.dot(e.Yt);
    if (j < K) row = row * Estep;
  }
  return f;
}

TargetResiduals target_error_residual(const ErrorSnapshot& a,
                                      const ErrorSnapshot& b,
                                      const ObserverKernels& ok,
                                      const SandwichParams& sp,
                                      const GainSet& gains) {
  const double dt = b.t - a.t;
  if (!(dt > 0.0))
    throw ConfigError("snapshots must be ordered and dt apart");
  const TargetFields Ta = to_target(a, ok, sp);
  const TargetFields Tb = to_target(b, ok, sp);
  const int M = static_cast<int>(Ta.alpha.size()) - 1;
  const int K = static_cast<int>(Ta.eta.size()) - 1;

  const Eigen::VectorXd alpha_mid = 0.5 * (Ta.alpha + Tb.alpha);
  const Eigen::VectorXd eta_mid = 0.5 * (Ta.eta + Tb.eta);
  const Eigen::VectorXd Z_mid = 0.5 * (Ta.Z + Tb.Z);
  const Eigen::VectorXd Y_mid = 0.5 * (a.Yt + b.Yt);

  TargetResiduals r;
  const Eigen::MatrixXd Abar0 = obs_A0(sp, gains);
  const Eigen::MatrixXd Abar1 = obs_A1(sp, gains);
  r.Z_ode = ((Tb.Z - Ta.Z) / dt - Abar0 * Z_mid).cwiseAbs().maxCoeff();
  r.alpha_bc = std::abs(alpha_mid[0] - sp.C0.dot(Z_mid));
  r.Y_ode = ((b.Yt - a.Yt) / dt - Abar1 * Y_mid - sp.B1 * alpha_mid[M])
                .cwiseAbs()
                .maxCoeff();

  const Eigen::VectorXd ax = fd_derivative(alpha_mid, 1.0 / M);
  const Eigen::VectorXd at = (Tb.alpha - Ta.alpha) / dt;
  r.alpha_transport =
      (at + sp.q1 * ax + sp.c1 * alpha_mid).cwiseAbs().maxCoeff();

  const Eigen::VectorXd ex = fd_derivative(eta_mid, 1.0 / K);
  const Eigen::VectorXd et = (Tb.eta - Ta.eta) / dt;
  r.eta_transport = (et + ex / sp.tau).cwiseAbs().maxCoeff();
  r.eta_outlet = std::abs(eta_mid[K]);
  r.beta_sup = 0.5 * (Ta.beta + Tb.beta).cwiseAbs().maxCoeff();
  r.w1_bc = std::abs(0.5 * (a.wt[M] + b.wt[M]));
  return r;
}

IdentityDefects transformation_identity_defects(const VectorXd& alpha,
                                                const VectorXd& beta,
                                                const VectorXd& Xt,
                                                const ObserverKernels& ok,
                                                const SandwichParams& sp,
                                                const GainSet& gains) {
  const int M = static_cast<int>(alpha.size()) - 1;
  if (beta.size() != M + 1)
    throw ConfigError("alpha and beta must share one grid");
  const double h = 1.0 / M;

  // Decoupled time rates of the supplied fields.
  const Eigen::VectorXd ax = fd_derivative(alpha, h);
  const Eigen::VectorXd bx = fd_derivative(beta, h);
  Eigen::VectorXd at(M + 1), bt(M + 1);
  for (int i = 0; i <= M; ++i) {
    const double x = i * h;
    double accM = 0.0, accN = 0.0;
    for (int j = i; j <= M; ++j) {
      double wgt = (j == i || j == M) ? 0.5 : 1.0;
      if (i == M) wgt = 0.0;
      const double y = j * h;
      accM += wgt * ok.barM.interp(x, y) * beta[j];
      accN += wgt * ok.barN.interp(x, y) * beta[j];
    }
    at[i] = -sp.q1 * ax[i] + h * accM - sp.c1 * alpha[i] - sp.c1 * beta[i];
    bt[i] = sp.q2 * bx[i] + h * accN - sp.c2 * beta[i];
  }

  // Map to physical error fields and their rates (kernels are static).
  Eigen::VectorXd zt(M + 1), wt(M + 1), zt_t(M + 1), wt_t(M + 1);
  for (int i = 0; i <= M; ++i) {
    const double x = i * h;
    double iphi = 0.0, ipsi = 0.0, iphit = 0.0, ipsit = 0.0;
    for (int j = i; j <= M; ++j) {
      double wgt = (j == i || j == M) ? 0.5 : 1.0;
      if (i == M) wgt = 0.0;
      const double y = j * h;
      const double ph = ok.phi.interp(x, y), ps = ok.psi.interp(x, y);
      iphi += wgt * ph * alpha[j];
      ipsi += wgt * ps * alpha[j];
      iphit += wgt * ph * at[j];
      ipsit += wgt * ps * at[j];
    }
    zt[i] = alpha[i] - h * iphi;
    wt[i] = beta[i] - h * ipsi;
    zt_t[i] = at[i] - h * iphit;
    wt_t[i] = bt[i] - h * ipsit;
  }
  const Eigen::VectorXd zt_x = fd_derivative(zt, h);
  const Eigen::VectorXd wt_x = fd_derivative(wt, h);

  IdentityDefects d;
  for (int i = 0; i <= M; ++i) {
    const double x = i * h;
    const double ze = zt_t[i] + sp.q1 * zt_x[i] + sp.c1 * (zt[i] + wt[i]) -
                      sp.q1 * ok.phi.interp(x, 1.0) * alpha[M];
    const double we = wt_t[i] - sp.q2 * wt_x[i] + sp.c2 * (zt[i] + wt[i]) -
                      sp.q1 * ok.psi.interp(x, 1.0) * alpha[M];
    d.z_eq = std::max(d.z_eq, std::abs(ze));
    d.w_eq = std::max(d.w_eq, std::abs(we));
  }

  // Settled regime: with beta = 0 the proximal error under its injection
  // maps onto Z' = A0 Z - L0 alpha(0); the inlet kernel value q1 K1(0) = L0
  // folds that term into Abar0 Z whenever alpha(0) = C0 Z holds on top.
  const int Nk = ok.K1.N();
  const Eigen::VectorXd K11 = ok.K1.col(Nk);
  Eigen::VectorXd at0(M + 1);
  for (int i = 0; i <= M; ++i) at0[i] = -sp.q1 * ax[i] - sp.c1 * alpha[i];
  double ipsi0 = 0.0;
  Eigen::VectorXd iK = Eigen::VectorXd::Zero(Xt.size());
  Eigen::VectorXd iKt = Eigen::VectorXd::Zero(Xt.size());
  for (int j = 0; j <= M; ++j) {
    const double wgt = trap_weight(j, M);
    const double y = j * h;
    ipsi0 += wgt * ok.psi.interp(0.0, y) * alpha[j];
    iK += wgt * ok.K1.interp(y) * alpha[j];
    iKt += wgt * ok.K1.interp(y) * at0[j];
  }
  const Eigen::VectorXd Xdot =
      sp.A0 * Xt - sp.E0 * ipsi0 - sp.q1 * K11 * alpha[M];
  const Eigen::VectorXd Z = Xt - iK;
  const Eigen::VectorXd Zdot = Xdot - iKt;
  d.Z_ode = (Zdot - sp.A0 * Z + gains.L0 * alpha[0]).cwiseAbs().maxCoeff();
  return d;
}

double observer_error_norm(const Plant& plant, const Observer& obs) {
  const ErrorSnapshot e = error_snapshot(plant, obs);
  const InjectionSample& s = obs.last();
  return e.zt.cwiseAbs().maxCoeff() + e.wt.cwiseAbs().maxCoeff() +
         e.vt.cwiseAbs().maxCoeff() + e.Xt.norm() + e.Yt.norm() + s.h1_norm +
         s.h2_sup + s.h3_sup + std::abs(s.h4) + s.h5_sup;
}

}  // namespace sandwave

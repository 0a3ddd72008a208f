#include "sandwave/transport.hpp"

#include <cmath>

#include "sandwave/model.hpp"

namespace sandwave {

namespace {

// Linear interpolation of a nodal field at fractional node index gx >= 0.
double sample(const Eigen::VectorXd& f, double gx) {
  const int M = static_cast<int>(f.size()) - 1;
  if (gx >= M) return f[M];
  const int j = static_cast<int>(gx);
  const double r = gx - j;
  return f[j] + r * (f[j + 1] - f[j]);
}

}  // namespace

void advance_transport(Eigen::VectorXd& z, Eigen::VectorXd& w,
                       const Eigen::VectorXd& Sz, const Eigen::VectorXd& Sw,
                       double q1, double q2, double dt, TransportScheme scheme,
                       const TransportBC& bc) {
  const int M = static_cast<int>(z.size()) - 1;
  if (w.size() != M + 1 || Sz.size() != M + 1 || Sw.size() != M + 1)
    throw ConfigError("transport fields must share one grid");
  const double sz = q1 * dt * M;  // shift in cells per step
  const double sw = q2 * dt * M;

  if (scheme == TransportScheme::ExplicitUpwind && (sz > 1.0 || sw > 1.0))
    throw NumericalError(
        "explicit upwind violates the CFL bound; shrink dt or use the "
        "characteristic-tracing scheme");
  if (sz >= M || sw >= M)
    throw NumericalError("one step sweeps past the whole domain; shrink dt");

  Eigen::VectorXd zn(M + 1), wn(M + 1);

  // nodes whose characteristic feet stay inside the domain
  if (scheme == TransportScheme::SemiLagrangian) {
    for (int i = 1; i <= M; ++i)
      if (i >= sz) zn[i] = sample(z, i - sz) + dt * Sz[i];
    for (int i = 0; i < M; ++i)
      if (M - i >= sw) wn[i] = sample(w, i + sw) + dt * Sw[i];
  } else {
    for (int i = 1; i <= M; ++i) zn[i] = z[i] - sz * (z[i] - z[i - 1]) + dt * Sz[i];
    for (int i = 0; i < M; ++i) wn[i] = w[i] + sw * (w[i + 1] - w[i]) + dt * Sw[i];
  }

  // inflow boundaries at the new time level; each outflow partner above is
  // already available because its foot lies inside the domain
  const double z0_new = bc.pz * wn[0] + bc.z0_affine;
  const double w1_new = bc.qw * zn[M] + bc.w1_affine;
  zn[0] = z0_new;
  wn[M] = w1_new;

  // feet that crossed the inflow boundary mid-step: the characteristic
  // entered at time t + lam*dt, so blend the old and new boundary values and
  // accumulate the source only over the in-domain fraction of the step
  if (scheme == TransportScheme::SemiLagrangian) {
    for (int i = 1; i < sz && i <= M; ++i) {
      const double lam = 1.0 - i / sz;
      zn[i] = bc.z0_old + lam * (z0_new - bc.z0_old) + (1.0 - lam) * dt * Sz[i];
    }
    for (int i = M - 1; M - i < sw && i >= 0; --i) {
      const double lam = 1.0 - (M - i) / sw;
      wn[i] = bc.w1_old + lam * (w1_new - bc.w1_old) + (1.0 - lam) * dt * Sw[i];
    }
  }

  z.swap(zn);
  w.swap(wn);
}

}  // namespace sandwave

#include "sandwave/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace sandwave {
namespace {

// ---------------------------------------------------------------------------
// Characteristic path integral for the diagonal-data kernels.
//
// The target point (x,y) connects to the diagonal point (d,d),
// d = (sy x + sx y)/(sx+sy), along (d - sx s, d + sy s); the integrand g is
// sampled on that path with composite trapezoid, one step per lattice cell.
// ---------------------------------------------------------------------------
template <typename G>
double path_integral(double x, double y, double sx, double sy, double h,
                     const G& g) {
  const double sstar = (y - x) / (sx + sy);
  if (sstar <= 0.0) return 0.0;
  const double d = (sy * x + sx * y) / (sx + sy);
  const int nsteps = std::max(1, static_cast<int>(std::ceil((y - x) / h - 1e-12)));
  const double ds = sstar / nsteps;
  double acc = 0.5 * (g(d, d) + g(d - sx * sstar, d + sy * sstar));
  for (int k = 1; k < nsteps; ++k) acc += g(d - sx * k * ds, d + sy * k * ds);
  return acc * ds;
}

void check_gain_dims(const SandwichParams& sp, const GainSet& g) {
  if (g.L0.size() != sp.n() || g.F0.size() != sp.n() ||
      g.L1.size() != sp.m() || g.F1.size() != sp.m())
    throw ConfigError("kernel solve: gain dimensions do not match the system");
}

void check_finite(const TriGrid& g, const char* what) {
  if (!std::isfinite(g.sup_abs()))
    throw NumericalError(std::string("kernel solve: ") + what +
                         " left the finite range");
}

void check_finite(const LineGrid& g, const char* what) {
  if (!g.values().allFinite())
    throw NumericalError(std::string("kernel solve: ") + what +
                         " left the finite range");
}

// Centered-difference sup residual of a first-order PDE
//   a f_x + b f_y + r(f, coupled; i, j) = 0
// over interior lattice nodes (1 <= i, i+2 <= j <= N-1).
template <typename R>
double interior_pde_residual(const TriGrid& f, double a, double b,
                             const R& rest) {
  const int N = f.N();
  const double h = f.h();
  double sup = 0.0;
  for (int i = 1; i <= N; ++i)
    for (int j = i + 2; j <= N - 1; ++j) {
      const double fx = (f.at(i + 1, j) - f.at(i - 1, j)) / (2 * h);
      const double fy = (f.at(i, j + 1) - f.at(i, j - 1)) / (2 * h);
      sup = std::max(sup, std::abs(a * fx + b * fy + rest(i, j)));
    }
  return sup;
}

}  // namespace

// ============================================================================
// Observer kernels
// ============================================================================

ObserverKernels solve_observer_kernels(const SandwichParams& sp,
                                       const GainSet& gains,
                                       const KernelOptions& opt) {
  sp.validate();
  check_gain_dims(sp, gains);
  const int N = opt.N;
  const int n = sp.n();
  const double h = 1.0 / N;
  const double q1 = sp.q1, q2 = sp.q2, c1 = sp.c1, c2 = sp.c2;

  ObserverKernels K;
  K.psi = TriGrid(N);
  K.phi = TriGrid(N);
  K.K1 = LineGrid(n, N);

  const double psi_diag = c2 / (q1 + q2);
  for (int i = 0; i <= N; ++i) K.psi.at(i, i) = psi_diag;

  // Implicit trapezoid factors for the K1 march.
  const MatrixXd Mk = (sp.A0 + c1 * MatrixXd::Identity(n, n)) / q1;
  const Eigen::PartialPivLU<MatrixXd> luK(MatrixXd::Identity(n, n) -
                                          (h / 2) * Mk);
  const MatrixXd rK = MatrixXd::Identity(n, n) + (h / 2) * Mk;

  double scale = 1.0;
  for (int it = 1; it <= opt.max_iter; ++it) {
    // psi from the diagonal: d psi/ds = -(c2-c1) psi - c2 phi.
    TriGrid psi_new(N);
    for (int i = 0; i <= N; ++i) psi_new.at(i, i) = psi_diag;
    auto g_psi = [&](double px, double py) {
      return -((c2 - c1) * K.psi.interp(px, py) + c2 * K.phi.interp(px, py));
    };
    for (int i = 0; i <= N; ++i)
      for (int j = i + 1; j <= N; ++j)
        psi_new.at(i, j) =
            psi_diag + path_integral(i * h, j * h, q2, q1, h, g_psi);

    // K1 from psi_new(0, .): q1 K1' = (A0 + c1 I) K1 - E0 psi(0,y).
    LineGrid K1_new(n, N);
    K1_new.set_col(0, gains.L0 / q1);
    for (int j = 1; j <= N; ++j) {
      const VectorXd src =
          (h / (2 * q1)) * sp.E0 * (psi_new.at(0, j) + psi_new.at(0, j - 1));
      K1_new.set_col(j, luK.solve(rK * K1_new.col(j - 1) - src));
    }

    // phi marched up x = const - y diagonals from the x = 0 edge:
    //   phi(0,r) = p psi(0,r) - C0 K1(r), d phi/dt = -(c1/q1) psi.
    TriGrid phi_new(N);
    for (int r = 0; r <= N; ++r)
      phi_new.at(0, r) = sp.p * psi_new.at(0, r) - (sp.C0 * K1_new.col(r))(0);
    for (int r = 0; r <= N; ++r)
      for (int i = 1; i + r <= N; ++i)
        phi_new.at(i, i + r) =
            phi_new.at(i - 1, i + r - 1) -
            (h / 2) * (c1 / q1) *
                (psi_new.at(i, i + r) + psi_new.at(i - 1, i + r - 1));

    const double delta = std::max({K.psi.sup_abs_diff(psi_new),
                                   K.phi.sup_abs_diff(phi_new),
                                   K.K1.sup_abs_diff(K1_new)});
    K.psi = std::move(psi_new);
    K.phi = std::move(phi_new);
    K.K1 = std::move(K1_new);
    K.iterations = it;
    check_finite(K.psi, "psi");
    check_finite(K.phi, "phi");
    scale = std::max({1.0, K.psi.sup_abs(), K.phi.sup_abs(), K.K1.sup_abs()});
    if (delta <= opt.tol * scale) break;
    if (it == opt.max_iter)
      throw NumericalError("observer kernel iteration did not converge");
  }

  // barM(x,y) = int_x^y phi(x,d) barM(d,y) dd - c1 phi(x,y): for each fixed
  // y-column, march x downward; the d = x endpoint is implicit.
  K.barM = TriGrid(N);
  K.barN = TriGrid(N);
  for (int jy = 0; jy <= N; ++jy) {
    K.barM.at(jy, jy) = -c1 * K.phi.at(jy, jy);
    for (int ix = jy - 1; ix >= 0; --ix) {
      double s = -c1 * K.phi.at(ix, jy);
      for (int d = ix + 1; d <= jy; ++d) {
        const double w = (d == jy) ? h / 2 : h;
        s += w * K.phi.at(ix, d) * K.barM.at(d, jy);
      }
      K.barM.at(ix, jy) = s / (1.0 - (h / 2) * K.phi.at(ix, ix));
    }
    for (int ix = jy; ix >= 0; --ix) {
      double s = -c1 * K.psi.at(ix, jy);
      for (int d = ix; d <= jy; ++d) {
        const double w = (d == ix || d == jy) ? h / 2 : h;
        if (ix == jy) break;  // empty integral
        s += w * K.psi.at(ix, d) * K.barM.at(d, jy);
      }
      K.barN.at(ix, jy) = s;
    }
  }
  check_finite(K.barM, "barM");
  return K;
}

// ============================================================================
// Controller kernels and gain integrals
// ============================================================================

ControllerKernels solve_controller_kernels(const SandwichParams& sp,
                                           const GainSet& gains,
                                           const KernelOptions& opt) {
  sp.validate();
  check_gain_dims(sp, gains);
  const int N = opt.N;
  const int n = sp.n(), m = sp.m();
  const double h = 1.0 / N;
  const double q1 = sp.q1, q2 = sp.q2, c1 = sp.c1, c2 = sp.c2, q = sp.q;

  ControllerKernels K;
  K.K3 = TriGrid(N);
  K.J3 = TriGrid(N);
  K.K2 = TriGrid(N);
  K.J2 = TriGrid(N);
  K.gamma = LineGrid(m, N);
  K.lambda = LineGrid(m, N);

  const double j3_diag = c1 / (q1 + q2);
  const double k2_diag = -c2 / (q1 + q2);
  const MatrixXd Im = MatrixXd::Identity(m, m);

  // gamma' = -gamma Mg - (q2/q1) J3(x,1) C1, marched down from gamma(1)=-F1.
  const MatrixXd Mg = (sp.A1 + c1 * Im) / q1;
  const Eigen::PartialPivLU<MatrixXd> luG((Im - (h / 2) * Mg).transpose());
  const MatrixXd rG = (Im + (h / 2) * Mg).transpose();
  // lambda' = lambda Ml + (q1/(q2 q)) K2(x,1) C1 after substituting the
  // J2 top-edge relation; marched down from lambda(1) = q gamma(1) + C1.
  const MatrixXd Ml = (sp.A1 + c2 * Im) / q2 - sp.B1 * sp.C1 / (q2 * q);
  const Eigen::PartialPivLU<MatrixXd> luL((Im + (h / 2) * Ml).transpose());
  const MatrixXd rL = (Im - (h / 2) * Ml).transpose();

  for (int i = 0; i <= N; ++i) {
    K.J3.at(i, i) = j3_diag;
    K.K2.at(i, i) = k2_diag;
  }

  double scale = 1.0;
  for (int it = 1; it <= opt.max_iter; ++it) {
    // J3 from the diagonal: d J3/ds = (c1-c2) J3 - c1 K3 along (-q1, q2).
    TriGrid J3_new(N);
    for (int i = 0; i <= N; ++i) J3_new.at(i, i) = j3_diag;
    auto g_j3 = [&](double px, double py) {
      return (c1 - c2) * K.J3.interp(px, py) - c1 * K.K3.interp(px, py);
    };
    for (int i = 0; i <= N; ++i)
      for (int j = i + 1; j <= N; ++j)
        J3_new.at(i, j) =
            j3_diag + path_integral(i * h, j * h, q1, q2, h, g_j3);

    // K2 from the diagonal: d K2/ds = (c1-c2) K2 + c2 J2 along (-q2, q1).
    TriGrid K2_new(N);
    for (int i = 0; i <= N; ++i) K2_new.at(i, i) = k2_diag;
    auto g_k2 = [&](double px, double py) {
      return (c1 - c2) * K.K2.interp(px, py) + c2 * K.J2.interp(px, py);
    };
    for (int i = 0; i <= N; ++i)
      for (int j = i + 1; j <= N; ++j)
        K2_new.at(i, j) =
            k2_diag + path_integral(i * h, j * h, q2, q1, h, g_k2);

    // gamma march (top-edge source from the fresh J3).
    LineGrid gamma_new(m, N);
    gamma_new.set_col(N, -gains.F1.transpose());
    for (int i = N; i >= 1; --i) {
      const RowVectorXd ri = (q2 / q1) * J3_new.at(i, N) * sp.C1;
      const RowVectorXd rim = (q2 / q1) * J3_new.at(i - 1, N) * sp.C1;
      const VectorXd rhs = rG * gamma_new.col(i) +
                           (h / 2) * (ri + rim).transpose();
      gamma_new.set_col(i - 1, luG.solve(rhs));
    }

    // lambda march (source from the fresh K2 top edge).
    LineGrid lambda_new(m, N);
    lambda_new.set_col(
        N, (q * gamma_new.col(N).transpose() + sp.C1).transpose());
    for (int i = N; i >= 1; --i) {
      const RowVectorXd ri = (q1 / (q2 * q)) * K2_new.at(i, N) * sp.C1;
      const RowVectorXd rim = (q1 / (q2 * q)) * K2_new.at(i - 1, N) * sp.C1;
      const VectorXd rhs = rL * lambda_new.col(i) -
                           (h / 2) * (ri + rim).transpose();
      lambda_new.set_col(i - 1, luL.solve(rhs));
    }

    // K3 marched down the x - y diagonals from the top edge
    //   q1 K3(x,1) = q2 q J3(x,1) + gamma(x) B1,
    //   K3(i,j) = K3(i+1,j+1) - (h/2)(c2/q1)(J3(i,j) + J3(i+1,j+1)).
    TriGrid K3_new(N);
    for (int i = 0; i <= N; ++i)
      K3_new.at(i, N) = (q2 * q * J3_new.at(i, N) +
                         (gamma_new.col(i).transpose() * sp.B1)(0)) / q1;
    for (int j = N - 1; j >= 0; --j)
      for (int i = j; i >= 0; --i)
        K3_new.at(i, j) = K3_new.at(i + 1, j + 1) -
                          (h / 2) * (c2 / q1) *
                              (J3_new.at(i, j) + J3_new.at(i + 1, j + 1));

    // J2 likewise: q2 q J2(x,1) = q1 K2(x,1) - lambda(x) B1,
    //   J2(i,j) = J2(i+1,j+1) + (h/2)(c1/q2)(K2(i,j) + K2(i+1,j+1)).
    TriGrid J2_new(N);
    for (int i = 0; i <= N; ++i)
      J2_new.at(i, N) = (q1 * K2_new.at(i, N) -
                         (lambda_new.col(i).transpose() * sp.B1)(0)) /
                        (q2 * q);
    for (int j = N - 1; j >= 0; --j)
      for (int i = j; i >= 0; --i)
        J2_new.at(i, j) = J2_new.at(i + 1, j + 1) +
                          (h / 2) * (c1 / q2) *
                              (K2_new.at(i, j) + K2_new.at(i + 1, j + 1));

    const double delta = std::max(
        {K.K3.sup_abs_diff(K3_new), K.J3.sup_abs_diff(J3_new),
         K.K2.sup_abs_diff(K2_new), K.J2.sup_abs_diff(J2_new),
         K.gamma.sup_abs_diff(gamma_new), K.lambda.sup_abs_diff(lambda_new)});
    K.K3 = std::move(K3_new);
    K.J3 = std::move(J3_new);
    K.K2 = std::move(K2_new);
    K.J2 = std::move(J2_new);
    K.gamma = std::move(gamma_new);
    K.lambda = std::move(lambda_new);
    K.iterations = it;
    check_finite(K.K3, "K3");
    check_finite(K.J2, "J2");
    check_finite(K.lambda, "lambda");
    scale = std::max({1.0, K.K3.sup_abs(), K.J3.sup_abs(), K.K2.sup_abs(),
                      K.J2.sup_abs(), K.gamma.sup_abs(), K.lambda.sup_abs()});
    if (delta <= opt.tol * scale) break;
    if (it == opt.max_iter)
      throw NumericalError("controller kernel iteration did not converge");
  }

  // -------------------------------------------------------------------------
  // Gain integrals: coupled Volterra systems marched forward in x with the
  // endpoint contribution implicit (a shared 2x2 solve per node).
  //
  // The quadrature resolves the Volterra resolvent only while h * sup|kernel|
  // stays well below 1; beyond that the march returns finite garbage that
  // grows with N instead of converging. Guard it.
  // -------------------------------------------------------------------------
  const double ksup = std::max({K.K3.sup_abs(), K.J3.sup_abs(),
                                K.K2.sup_abs(), K.J2.sup_abs()});
  if (ksup * h > 0.5)
    throw NumericalError(
        "gain integrals unresolvable: kernel magnitude " +
        std::to_string(ksup) + " needs a lattice of at least N = " +
        std::to_string(static_cast<int>(std::ceil(2 * ksup))) +
        " (the distal feedback gain F1 is likely far too aggressive)");
  K.barK1 = LineGrid(1, N);
  K.barK2 = LineGrid(1, N);
  K.barK4 = LineGrid(n, N);
  K.barK5 = LineGrid(n, N);
  K.barK1.s(0) = sp.p * K.K2.at(0, 0) - K.K3.at(0, 0);
  K.barK2.s(0) = -sp.p * K.J2.at(0, 0) + K.J3.at(0, 0);
  K.barK4.set_col(0, -sp.E0 * K.K2.at(0, 0));
  K.barK5.set_col(0, sp.E0 * K.J2.at(0, 0));
  for (int k = 1; k <= N; ++k) {
    double s1 = sp.p * K.K2.at(0, k) - K.K3.at(0, k);
    double s2 = -sp.p * K.J2.at(0, k) + K.J3.at(0, k);
    VectorXd s4 = -sp.E0 * K.K2.at(0, k);
    VectorXd s5 = sp.E0 * K.J2.at(0, k);
    for (int y = 0; y < k; ++y) {
      const double w = (y == 0) ? h / 2 : h;
      s1 += w * (K.barK1.s(y) * K.K3.at(y, k) + K.barK2.s(y) * K.K2.at(y, k));
      s2 += w * (K.barK1.s(y) * K.J3.at(y, k) + K.barK2.s(y) * K.J2.at(y, k));
      s4 += w * (K.barK4.col(y) * K.K3.at(y, k) + K.barK5.col(y) * K.K2.at(y, k));
      s5 += w * (K.barK4.col(y) * K.J3.at(y, k) + K.barK5.col(y) * K.J2.at(y, k));
    }
    const double a11 = 1 - (h / 2) * K.K3.at(k, k);
    const double a12 = -(h / 2) * K.K2.at(k, k);
    const double a21 = -(h / 2) * K.J3.at(k, k);
    const double a22 = 1 - (h / 2) * K.J2.at(k, k);
    const double det = a11 * a22 - a12 * a21;
    K.barK1.s(k) = (a22 * s1 - a12 * s2) / det;
    K.barK2.s(k) = (-a21 * s1 + a11 * s2) / det;
    K.barK4.set_col(k, (a22 * s4 - a12 * s5) / det);
    K.barK5.set_col(k, (-a21 * s4 + a11 * s5) / det);
  }
  check_finite(K.barK1, "barK1");
  check_finite(K.barK2, "barK2");
  check_finite(K.barK4, "barK4");
  check_finite(K.barK5, "barK5");

  K.barK3 = RowVectorXd::Zero(m);
  K.barK6 = MatrixXd::Zero(n, m);
  for (int j = 0; j <= N; ++j) {
    const double w = trap_weight(j, N);
    K.barK3 += w * (K.barK2.s(j) * K.lambda.col(j).transpose() +
                    K.barK1.s(j) * K.gamma.col(j).transpose());
    K.barK6 += w * (K.barK5.col(j) * K.lambda.col(j).transpose() +
                    K.barK4.col(j) * K.gamma.col(j).transpose());
  }
  K.barK3 += sp.p * K.lambda.col(0).transpose() - K.gamma.col(0).transpose();
  K.barK6 += sp.E0 * K.lambda.col(0).transpose();

  // Synthesis quantities.
  const VectorXd C0p = sp.C0_pinv();
  const MatrixXd A0h = ctrl_A0(sp, gains);
  const MatrixXd A1h = ctrl_A1(sp, gains);
  const MatrixXd In = MatrixXd::Identity(n, n);
  K.N1 = C0p * (K.barK3 * sp.B1)(0) - q1 * C0p * K.barK1.s(N) +
         q2 * C0p * K.barK2.s(N) * q;
  K.N2 = sp.E0 - q2 * C0p * K.barK2.s(0) + q1 * C0p * K.barK1.s(0) * sp.p;
  K.MY = C0p * K.barK3 * A1h + K.barK6 - A0h * C0p * K.barK3;

  const LineGrid dbK1 = K.barK1.derivative();
  const LineGrid dbK2 = K.barK2.derivative();
  K.Malpha = LineGrid(n, N);
  K.Mbeta = LineGrid(n, N);
  for (int j = 0; j <= N; ++j) {
    K.Malpha.set_col(j, K.barK4.col(j) + q1 * C0p * dbK1.s(j) -
                            (A0h + c1 * In) * C0p * K.barK1.s(j));
    K.Mbeta.set_col(j, K.barK5.col(j) - q2 * C0p * dbK2.s(j) -
                           (A0h + c2 * In) * C0p * K.barK2.s(j));
  }
  if (!K.N1.allFinite() || !K.N2.allFinite() || !K.MY.allFinite() ||
      !K.barK3.allFinite() || !K.barK6.allFinite())
    throw NumericalError("gain integrals left the finite range");
  return K;
}

// ============================================================================
// Residuals
// ============================================================================

std::vector<KernelResidual> observer_kernel_residuals(
    const ObserverKernels& k, const SandwichParams& sp, const GainSet& gains) {
  const int N = k.N();
  const double q1 = sp.q1, q2 = sp.q2, c1 = sp.c1, c2 = sp.c2;
  std::vector<KernelResidual> out;

  out.push_back({"psi_pde",
                 interior_pde_residual(k.psi, q2, -q1, [&](int i, int j) {
                   return -(c2 - c1) * k.psi.at(i, j) - c2 * k.phi.at(i, j);
                 })});
  out.push_back({"phi_pde",
                 interior_pde_residual(k.phi, -q1, -q1, [&](int i, int j) {
                   return -c1 * k.psi.at(i, j);
                 })});

  double d = 0.0;
  for (int i = 0; i <= N; ++i)
    d = std::max(d, std::abs(k.psi.at(i, i) - c2 / (q1 + q2)));
  out.push_back({"psi_diag", d});

  d = 0.0;
  for (int j = 0; j <= N; ++j)
    d = std::max(d, std::abs(sp.p * k.psi.at(0, j) - k.phi.at(0, j) -
                             (sp.C0 * k.K1.col(j))(0)));
  out.push_back({"phi_edge", d});

  const LineGrid dK1 = k.K1.derivative();
  d = 0.0;
  for (int j = 1; j <= N - 1; ++j) {
    const VectorXd r = q1 * dK1.col(j) -
                       (sp.A0 + c1 * MatrixXd::Identity(sp.n(), sp.n())) *
                           k.K1.col(j) +
                       sp.E0 * k.psi.at(0, j);
    d = std::max(d, r.cwiseAbs().maxCoeff());
  }
  out.push_back({"K1_ode", d});
  out.push_back(
      {"K1_init", (k.K1.col(0) - gains.L0 / q1).cwiseAbs().maxCoeff()});

  // Defining integral equations of barM / barN, re-evaluated on the grid.
  const double h = 1.0 / N;
  double dm = 0.0, dn = 0.0;
  for (int jy = 0; jy <= N; ++jy)
    for (int ix = 0; ix <= jy; ++ix) {
      double sm = -c1 * k.phi.at(ix, jy), sn = -c1 * k.psi.at(ix, jy);
      for (int dd = ix; dd <= jy; ++dd) {
        if (ix == jy) break;
        const double w = (dd == ix || dd == jy) ? h / 2 : h;
        sm += w * k.phi.at(ix, dd) * k.barM.at(dd, jy);
        sn += w * k.psi.at(ix, dd) * k.barM.at(dd, jy);
      }
      dm = std::max(dm, std::abs(k.barM.at(ix, jy) - sm));
      dn = std::max(dn, std::abs(k.barN.at(ix, jy) - sn));
    }
  out.push_back({"barM_eq", dm});
  out.push_back({"barN_eq", dn});
  return out;
}

std::vector<KernelResidual> controller_kernel_residuals(
    const ControllerKernels& k, const SandwichParams& sp,
    const GainSet& gains) {
  const int N = k.N();
  const double q1 = sp.q1, q2 = sp.q2, c1 = sp.c1, c2 = sp.c2, q = sp.q;
  const MatrixXd Im = MatrixXd::Identity(sp.m(), sp.m());
  std::vector<KernelResidual> out;

  out.push_back({"J3_pde",
                 interior_pde_residual(k.J3, -q1, q2, [&](int i, int j) {
                   return (c2 - c1) * k.J3.at(i, j) + c1 * k.K3.at(i, j);
                 })});
  out.push_back({"K3_pde",
                 interior_pde_residual(k.K3, -q1, -q1, [&](int i, int j) {
                   return c2 * k.J3.at(i, j);
                 })});
  out.push_back({"K2_pde",
                 interior_pde_residual(k.K2, q2, -q1, [&](int i, int j) {
                   return (c1 - c2) * k.K2.at(i, j) + c2 * k.J2.at(i, j);
                 })});
  out.push_back({"J2_pde",
                 interior_pde_residual(k.J2, q2, q2, [&](int i, int j) {
                   return c1 * k.K2.at(i, j);
                 })});

  double d = 0.0;
  for (int i = 0; i <= N; ++i)
    d = std::max(d, std::abs(k.J3.at(i, i) - c1 / (q1 + q2)));
  out.push_back({"J3_diag", d});
  d = 0.0;
  for (int i = 0; i <= N; ++i)
    d = std::max(d, std::abs(k.K2.at(i, i) + c2 / (q1 + q2)));
  out.push_back({"K2_diag", d});

  d = 0.0;
  for (int i = 0; i <= N; ++i)
    d = std::max(d, std::abs(q1 * k.K3.at(i, N) - q2 * q * k.J3.at(i, N) -
                             (k.gamma.col(i).transpose() * sp.B1)(0)));
  out.push_back({"K3_top", d});
  d = 0.0;
  for (int i = 0; i <= N; ++i)
    d = std::max(d, std::abs(q2 * q * k.J2.at(i, N) - q1 * k.K2.at(i, N) +
                             (k.lambda.col(i).transpose() * sp.B1)(0)));
  out.push_back({"J2_top", d});

  const LineGrid dg = k.gamma.derivative();
  const LineGrid dl = k.lambda.derivative();
  d = 0.0;
  for (int i = 1; i <= N - 1; ++i) {
    const RowVectorXd r = q1 * dg.col(i).transpose() +
                          k.gamma.col(i).transpose() * (sp.A1 + c1 * Im) +
                          q2 * k.J3.at(i, N) * sp.C1;
    d = std::max(d, r.cwiseAbs().maxCoeff());
  }
  out.push_back({"gamma_ode", d});
  d = 0.0;
  for (int i = 1; i <= N - 1; ++i) {
    const RowVectorXd r = q2 * dl.col(i).transpose() -
                          k.lambda.col(i).transpose() * (sp.A1 + c2 * Im) -
                          q2 * k.J2.at(i, N) * sp.C1;
    d = std::max(d, r.cwiseAbs().maxCoeff());
  }
  out.push_back({"lambda_ode", d});

  out.push_back({"gamma_end", (k.gamma.col(N).transpose() + gains.F1)
                                  .cwiseAbs()
                                  .maxCoeff()});
  out.push_back({"lambda_end",
                 (k.lambda.col(N).transpose() -
                  q * k.gamma.col(N).transpose() - sp.C1)
                     .cwiseAbs()
                     .maxCoeff()});
  return out;
}

double max_residual(const std::vector<KernelResidual>& r) {
  double s = 0.0;
  for (const auto& e : r) s = std::max(s, e.value);
  return s;
}

}  // namespace sandwave

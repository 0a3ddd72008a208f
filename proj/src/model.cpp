#include "sandwave/model.hpp"

#include "sandwave/linalg.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace sandwave {

// ===========================================================================
// SandwichParams
// ===========================================================================

void SandwichParams::validate() const {
  std::ostringstream err;
  auto fail = [&err](const std::string& what) { throw ConfigError("sandwich params: " + what); };
  const int nn = n(), mm = m();
  if (nn < 1 || mm < 1) fail("ODE orders must be >= 1");
  if (A0.cols() != nn || A1.cols() != mm) fail("A0/A1 must be square");
  if (E0.size() != nn) fail("E0 must have length n");
  if (B0.size() != nn) fail("B0 must have length n");
  if (C0.size() != nn) fail("C0 must have length n");
  if (B1.size() != mm) fail("B1 must have length m");
  if (C1.size() != mm) fail("C1 must have length m");
  if (!(q1 > 0.0) || !(q2 > 0.0)) fail("transport speeds q1, q2 must be positive");
  if (q == 0.0) fail("distal reflection q must be nonzero");
  if (tau < 0.0) fail("delay tau must be nonnegative");
  if (C0.norm() == 0.0) fail("C0 must be nonzero");
  if (C1.norm() == 0.0) fail("C1 must be nonzero");
}

VectorXd SandwichParams::C0_pinv() const {
  const double nrm2 = C0.squaredNorm();
  if (nrm2 == 0.0) throw ConfigError("C0 is zero; no right inverse");
  return C0.transpose() / nrm2;
}

MatrixXd obs_A0(const SandwichParams& sp, const GainSet& g) {
  return sp.A0 - g.L0 * sp.C0;
}

VectorXd gamma1(const SandwichParams& sp, const GainSet& g) {
  return la::expm(sp.tau * sp.A1) * g.L1;
}

MatrixXd obs_A1(const SandwichParams& sp, const GainSet& g) {
  const MatrixXd em = la::expm(-sp.tau * sp.A1);
  return sp.A1 - gamma1(sp, g) * (sp.C1 * em);
}

MatrixXd ctrl_A0(const SandwichParams& sp, const GainSet& g) {
  return sp.A0 - sp.B0 * g.F0;
}

MatrixXd ctrl_A1(const SandwichParams& sp, const GainSet& g) {
  return sp.A1 - sp.B1 * g.F1;
}

// ===========================================================================
// DCV reduction
// ===========================================================================

double DcvPhysicalParams::buoyancy() const {
  return 0.25 * std::numbers::pi * D_c * D_c * h_c * rho_s * g;
}

double DcvPhysicalParams::tension() const { return ML * g - buoyancy(); }

double DcvPhysicalParams::wave_speed() const { return std::sqrt(tension() / rho); }

double DcvPhysicalParams::impedance() const { return std::sqrt(tension() * rho); }

SandwichParams derive_sandwich_from_dcv(const DcvPhysicalParams& dcv) {
  const double T0 = dcv.tension();
  if (!(T0 > 0.0)) throw ConfigError("DCV: nonpositive static tension (payload lighter than buoyancy)");
  const double imp = dcv.impedance();
  SandwichParams sp;
  sp.A0 = MatrixXd::Constant(1, 1, -(dcv.d_0 + imp) / dcv.M0);
  sp.E0 = VectorXd::Constant(1, imp / dcv.M0);
  sp.B0 = VectorXd::Constant(1, 1.0 / dcv.M0);
  sp.C0 = RowVectorXd::Constant(1, 2.0);
  sp.A1 = MatrixXd::Constant(1, 1, (-dcv.d_L + imp) / dcv.ML);
  sp.B1 = VectorXd::Constant(1, -imp / dcv.ML);
  sp.C1 = RowVectorXd::Constant(1, 2.0);
  sp.p = -1.0;
  sp.q = -1.0;
  sp.q1 = dcv.wave_speed() / dcv.L;
  sp.q2 = sp.q1;
  sp.c1 = dcv.d_c / (2.0 * dcv.rho);
  sp.c2 = sp.c1;
  sp.tau = dcv.tau;
  sp.validate();
  return sp;
}

// ===========================================================================
// Riemann maps
// ===========================================================================

void riemann_forward(const ArrayXd& ut, const ArrayXd& ux, double v_w,
                     ArrayXd& z, ArrayXd& w) {
  z = ut - v_w * ux;
  w = ut + v_w * ux;
}

void riemann_inverse(const ArrayXd& z, const ArrayXd& w, double v_w,
                     ArrayXd& ut, ArrayXd& ux) {
  ut = 0.5 * (z + w);
  ux = (w - z) / (2.0 * v_w);
}

// ===========================================================================
// Assumption checks
// ===========================================================================

bool AssumptionReport::all_pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

const AssumptionCheck& AssumptionReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw std::out_of_range("assumption check not present: " + name);
}

std::string AssumptionReport::summary() const {
  std::ostringstream os;
  for (const auto& c : checks) {
    os << (c.pass ? "[ok]   " : "[FAIL] ") << c.name << " = " << c.value;
    if (!c.detail.empty()) os << "  (" << c.detail << ")";
    os << "\n";
  }
  return os.str();
}

namespace {
double max_re(const std::vector<std::complex<double>>& v) {
  double r = -std::numeric_limits<double>::infinity();
  for (const auto& s : v) r = std::max(r, s.real());
  return r;
}
}  // namespace

AssumptionReport check_assumptions(const SandwichParams& sp, const GainSet& g) {
  sp.validate();
  AssumptionReport rep;
  auto add = [&rep](const std::string& name, bool pass, double value,
                    const std::string& detail = "") {
    rep.checks.push_back({name, pass, value, detail});
  };

  // Reflection-product bound. The strict inequality |pq| < e^{c2/q2 + c1/q1}
  // is what keeps the distributed-delay feedback loop a contraction.
  const double bound = std::exp(sp.c2 / sp.q2 + sp.c1 / sp.q1);
  const double pq = std::abs(sp.p * sp.q);
  add("reflection_bound", pq < bound && sp.q != 0.0, pq,
      "bound e^{c2/q2+c1/q1} = " + std::to_string(bound));

  add("proximal_stabilizable", la::pbh_stabilizable(sp.A0, sp.B0), 0.0);
  add("proximal_detectable", la::pbh_detectable(sp.A0, sp.C0), 0.0);

  const MatrixXd C1d = sp.C1 * la::expm(-sp.tau * sp.A1);  // delayed output row
  add("distal_detectable", la::pbh_detectable(sp.A1, C1d), 0.0);

  const auto z0 = la::invariant_zeros(sp.A0, sp.B0, sp.C0);
  add("proximal_zeros", z0.empty() || max_re(z0) < -1e-9,
      z0.empty() ? 0.0 : max_re(z0),
      z0.empty() ? "no finite invariant zeros" : "max Re of invariant zeros");

  const auto z1 = la::invariant_zeros(sp.A1, sp.B1, C1d);
  add("distal_zeros", z1.empty() || max_re(z1) < -1e-9,
      z1.empty() ? 0.0 : max_re(z1),
      z1.empty() ? "no finite invariant zeros" : "max Re of invariant zeros");

  struct Entry {
    const char* name;
    MatrixXd mat;
  };
  const Entry spectra[] = {
      {"obs_A0_hurwitz", obs_A0(sp, g)},
      {"obs_A1_hurwitz", obs_A1(sp, g)},
      {"ctrl_A0_hurwitz", ctrl_A0(sp, g)},
      {"ctrl_A1_hurwitz", ctrl_A1(sp, g)},
  };
  for (const auto& e : spectra) {
    const double mre = la::max_real_eig(e.mat);
    add(e.name, mre < -1e-9, mre, "max Re eigenvalue");
  }
  return rep;
}

ScalarGainBounds scalar_gain_bounds(const SandwichParams& sp) {
  if (sp.n() != 1 || sp.m() != 1)
    throw ConfigError("scalar_gain_bounds requires n = m = 1");
  const double a0 = sp.A0(0, 0), a1 = sp.A1(0, 0);
  const double b0 = sp.B0(0), b1 = sp.B1(0);
  const double c0 = sp.C0(0), c1v = sp.C1(0);
  if (b0 <= 0.0 || b1 >= 0.0 || c0 <= 0.0 || c1v <= 0.0)
    throw ConfigError("scalar_gain_bounds assumes B0>0, B1<0, C0>0, C1>0");
  ScalarGainBounds b{};
  b.L0_min = a0 / c0;        // A0 - L0 C0 < 0
  b.L1_min = a1 / c1v;       // A1 - L1 C1 < 0 (similarity removes the e^{tau A1} factors)
  b.F0_min = a0 / b0;        // A0 - B0 F0 < 0 with B0 > 0
  b.F1_max = a1 / b1;        // A1 - B1 F1 < 0 with B1 < 0
  return b;
}

GainSet default_dcv_gains() {
  GainSet g;
  g.L0 = VectorXd::Constant(1, 0.05);
  g.L1 = VectorXd::Constant(1, 0.1);
  g.F0 = RowVectorXd::Constant(1, 8.57e5);
  g.F1 = RowVectorXd::Constant(1, -29.0);
  return g;
}

}  // namespace sandwave

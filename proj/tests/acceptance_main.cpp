// Acceptance gate: every check prints one [PASS]/[FAIL] line with its wall
// time; the exit code is the number of failures. Each check pins its own
// tolerances and time budget inline.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "marangoni/control.hpp"
#include "marangoni/galerkin.hpp"
#include "marangoni/io.hpp"
#include "marangoni/pdesim.hpp"
#include "marangoni/quadratic.hpp"
#include "marangoni/spectral.hpp"
#include "quad_fixtures.hpp"

using namespace marangoni;

namespace {

int g_failures = 0;

class Timer {
 public:
  Timer() : t0_(std::chrono::steady_clock::now()) {}
  double secs() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

void report(const std::string& name, bool ok, double elapsed, double budget,
            const std::string& detail) {
  bool pass = ok && elapsed < budget;
  if (!pass) ++g_failures;
  std::printf("[%s] %s (%.2fs of %.0fs budget%s%s)\n", pass ? "PASS" : "FAIL", name.c_str(),
              elapsed, budget, detail.empty() ? "" : "; ", detail.c_str());
  std::fflush(stdout);
}

ProfileParams stock(int N) {
  ProfileParams p;
  p.N = N;
  p.kappa = 0.02;
  p.z0 = 0.1;
  p.h = 10.0;
  p.nu = 100.0;
  return p;
}

// shared tuned profiles so later checks do not pay for earlier tuning twice
const HeatProfile& tuned_stock(int N) {
  static std::map<int, HeatProfile> cache;
  auto it = cache.find(N);
  if (it == cache.end())
    it = cache.emplace(N, tune_d(stock(N), TuneMode::Finite).profile).first;
  return it->second;
}

ProfileParams deep_params() {
  ProfileParams p;
  p.N = 2;
  p.kappa = 0.25;
  p.z0 = 1.25;
  p.nu = 1e3;
  p.h = std::log(1e3);
  return p;
}

Grid deep_grid() { return Grid{64, 128, std::log(1e3)}; }

const HeatProfile& deep_discrete() {
  static HeatProfile p = discrete_tune(deep_params(), deep_grid());
  return p;
}

const HeatProfile& deep_continuum() {
  static HeatProfile p = tune_d(deep_params(), TuneMode::Finite).profile;
  return p;
}

std::string fmt(const char* pat, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, pat, a, b, c);
  return buf;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= x.size();
  my /= y.size();
  double num = 0, den = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  return num / den;
}

// ---------------------------------------------------------------------------

void check_unperturbed_spectrum() {
  Timer tm;
  const double h = M_PI, nu = 10.0;
  const int kmax = 8, mmax = 8;
  auto entries = unperturbed_spectrum(h, nu, kmax, mmax);
  const size_t expected = size_t(kmax + 1) * (mmax + 1) + size_t(kmax + 1) * mmax;
  double worst = 0.0;
  std::set<std::tuple<int, int, int>> seen;
  for (const auto& e : entries) {
    double kk = double(e.k) * e.k + double(e.m) * e.m;  // (m pi / h)^2 = m^2 at h = pi
    double want = (e.family == SpectralFamily::Flow) ? -nu * kk : -kk;
    worst = std::max(worst, std::abs(e.lambda - want) / std::max(1.0, std::abs(want)));
    seen.insert({e.k, e.m, e.family == SpectralFamily::Flow ? 1 : 0});
  }
  bool ok = entries.size() == expected && seen.size() == expected && worst <= 1e-8;
  report("unperturbed spectrum matches the closed forms", ok, tm.secs(), 1.0,
         fmt("max rel err %.2e over %.0f entries", worst, double(entries.size())));
}

void check_limit_tuning() {
  Timer tm;
  double worst = 0.0;
  bool ok = true;
  for (int N : {1, 2, 3}) {
    TuneResult tr = tune_d(stock(N), TuneMode::Limit);
    for (int k = 1; k <= N; ++k) {
      double r = std::abs(characteristic_residual(k, Complex(0.0, 0.0), tr.profile,
                                                  ResidualMode::Limit));
      worst = std::max(worst, r);
    }
    ok = ok && (int)tr.d.size() == N;
  }
  ok = ok && worst < 1e-10;
  report("limit-mode tuning closes the dispersion at the origin", ok, tm.secs(), 30.0,
         fmt("max |F(k,0)| = %.2e", worst));
}

void check_spectrum_scan() {
  Timer tm;
  const HeatProfile& prof = tuned_stock(2);
  const Complex lo(-2.0, -5.0), hi(0.25, 5.0);
  bool winding_ok = true;
  std::vector<int> zero_modes;
  double gap = 1e300;
  for (int k = 1; k <= 12; ++k) {
    RootScanResult r = find_roots(k, prof, ResidualMode::Finite, lo, hi);
    winding_ok = winding_ok && (r.zero_count == (int)r.roots.size());
    bool has_zero = false;
    for (Complex z : r.roots) {
      if (std::abs(z) < 1e-6)
        has_zero = true;
      else
        gap = std::min(gap, -z.real());
    }
    if (has_zero) zero_modes.push_back(k);
  }
  SpectrumReport rep = scan_spectrum(prof, 12, ResidualMode::Finite, lo, hi);
  bool zeros_ok = zero_modes == std::vector<int>{1, 2} && rep.zero_modes == zero_modes;
  bool ok = winding_ok && zeros_ok && gap > 0.0 && rep.gap > 0.0;
  report("tuned spectrum: winding counts, zero modes, spectral gap", ok, tm.secs(), 300.0,
         fmt("gap %.4f (report %.4f)", gap, rep.gap));
}

void check_gram_identity() {
  Timer tm;
  const HeatProfile& prof = tuned_stock(2);
  std::vector<ModePair> pairs = biorthogonalize(prof, 2);
  Mat G = gram_matrix(pairs, prof.params().h, prof.grid());
  double dev = (G - Mat::Identity(5, 5)).cwiseAbs().maxCoeff();
  report("biorthogonal pairing matrix is the identity", dev <= 1e-8, tm.secs(), 10.0,
         fmt("max deviation %.2e", dev));
}

void check_inverse_roundtrips() {
  Timer tm;
  const int N = 3;
  const HeatProfile& prof = tuned_stock(N);
  std::vector<ModePair> pairs = biorthogonalize(prof, N);
  std::mt19937 rng(20260815u);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  auto rmat = [&] {
    Mat m(N, N);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) m(i, j) = U(rng);
    return m;
  };
  auto rvec = [&] {
    Vec v(N);
    for (int i = 0; i < N; ++i) v(i) = U(rng);
    return v;
  };
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    ControlTarget t;
    t.Tpp = rmat();
    t.Tmm = rmat();
    t.Tpm = rmat();
    t.Tmp = rmat();
    HeatSource2D u1 = solve_control(t, pairs, prof, 24);
    Mat Mout = compute_M(u1.to_field(), pairs, prof.grid(), prof.delta1());
    Mat Mref(2 * N, 2 * N);
    Mref.topLeftCorner(N, N) = t.Tpp;
    Mref.topRightCorner(N, N) = t.Tpm;
    Mref.bottomLeftCorner(N, N) = t.Tmp;
    Mref.bottomRightCorner(N, N) = t.Tmm;
    worst = std::max(worst, (Mout - Mref).cwiseAbs().maxCoeff());

    Vec fp = rvec(), fm = rvec();
    HeatSource2D eta = solve_forcing(fp, fm, pairs, prof, 24);
    Vec fout = compute_f(eta.to_field(), pairs, prof.grid());
    Vec fref(2 * N);
    fref.head(N) = fp;
    fref.tail(N) = fm;
    worst = std::max(worst, (fout - fref).cwiseAbs().maxCoeff());
  }
  report("control and forcing inverse problems round-trip", worst <= 1e-6, tm.secs(), 60.0,
         fmt("max entry error %.2e over 20 random targets", worst));
}

void check_sidon_sets() {
  Timer tm;
  bool ok = true;
  int largest = 0;
  for (int p = 1; p <= 8; ++p) {
    SidonSet s = sidon_set(p);
    ok = ok && verify_sidon(s) && (int)s.ks.size() == p;
    std::set<int> sums;
    for (int i = 0; i < p && ok; ++i) {
      ok = ok && s.ks[i] % 3 == 1;
      for (int j = i; j < p; ++j) ok = ok && sums.insert(s.ks[i] + s.ks[j]).second;
    }
    largest = p == 8 ? s.ks.back() : largest;
  }
  ok = ok && sidon_set(2).ks == std::vector<int>{1, 7};
  report("sidon wavenumber sets verify exhaustively", ok, tm.secs(), 1.0,
         fmt("p = 1..8, largest element %.0f", double(largest)));
}

// sup over aligned samples of the slow-coordinate deviation
double track_error(const SlowFastSplit& sp, const Trajectory& ref, const Vec& Y0,
                   size_t nwin, double dt) {
  Vec X0(sp.N);
  X0.head(sp.p) = Y0;
  X0.tail(sp.N - sp.p) = sp.manifold_Z(Y0);
  Trajectory tr = integrate(sp, X0, ref.t[nwin - 1], dt);
  double e = 0.0;
  size_t n = std::min(nwin, tr.x.size());
  for (size_t j = 0; j < n; ++j)
    e = std::max(e, (tr.x[j].head(sp.p) - ref.x[j]).lpNorm<Eigen::Infinity>());
  return e;
}

void check_realized_tracking() {
  Timer tm;
  const Tensor3R& K = fixtures::template_K();
  const double dt = 0.01;
  const std::vector<double> xis{1e-2, 1e-3, 1e-4};

  TargetField sad = fixtures::saddle_target();
  Vec Ys(2);
  Ys << 0.05, 0.5;
  Trajectory ref_s = integrate(fixtures::as_system(sad), Ys, 3.5, dt);
  size_t nwin = ref_s.x.size();
  for (size_t j = 0; j < ref_s.x.size(); ++j) {
    if (ref_s.x[j].norm() > sad.R0) {
      nwin = j + 1;  // compare while the reference stays in the prescribed ball
      break;
    }
  }

  TargetField att = fixtures::attracting_target();
  Vec Ya(2);
  Ya << 0.4, 0.3;
  Trajectory ref_a = integrate(fixtures::as_system(att), Ya, 20.0, dt);

  std::vector<double> lx, le;
  double e4 = 0.0;
  for (double xi : xis) {
    double es = track_error(build_realizer(sad, K, xi), ref_s, Ys, nwin, dt);
    double ea = track_error(build_realizer(att, K, xi), ref_a, Ya, ref_a.x.size(), dt);
    double e = std::max(es, ea);
    lx.push_back(std::log(xi));
    le.push_back(std::log(e));
    if (xi == 1e-4) e4 = e;
  }
  double slope = fit_slope(lx, le);
  bool ok = slope >= 0.4 && e4 < 5e-2;
  report("realized slow dynamics track the prescribed fields", ok, tm.secs(), 120.0,
         fmt("error slope %.2f, sup error %.2e at the stiffest setting", slope, e4));
}

void check_fast_contraction() {
  Timer tm;
  const Tensor3R& K = fixtures::template_K();
  TargetField att = fixtures::attracting_target();
  Vec Y0(2);
  Y0 << 0.4, 0.3;

  const double xi = 1e-2;
  SlowFastSplit sp = build_realizer(att, K, xi);
  Vec X0(sp.N);
  X0.head(2) = Y0;
  X0.tail(4) = sp.manifold_Z(Y0);
  X0(2) += 1.0;  // off-manifold displacement
  Trajectory tr = integrate(sp, X0, 3.0 * xi, xi / 40.0);
  std::vector<double> ts, lr;
  for (size_t j = 0; j < tr.t.size(); ++j) {
    if (tr.t[j] < 0.5 * xi || tr.t[j] > 3.0 * xi) continue;
    double r = (tr.x[j].tail(4) - sp.manifold_Z(tr.x[j].head(2))).norm();
    ts.push_back(tr.t[j]);
    lr.push_back(std::log(r));
  }
  double efold = -1.0 / fit_slope(ts, lr);
  bool efold_ok = std::abs(efold - xi) <= 0.2 * xi;

  std::vector<double> lx, le;
  for (double x : {1e-2, 1e-3, 1e-4}) {
    double r = slow_manifold_residual(build_realizer(att, K, x), Y0);
    lx.push_back(std::log(x));
    le.push_back(std::log(r));
  }
  double slope = fit_slope(lx, le);
  bool ok = efold_ok && slope >= 0.4;
  report("fast transients contract and the manifold residual shrinks", ok, tm.secs(), 60.0,
         fmt("e-fold %.4f vs 0.0100, residual slope %.2f", efold, slope));
}

void check_discrete_stationarity() {
  Timer tm;
  Grid grid = deep_grid();
  const HeatProfile& prof = deep_discrete();
  std::vector<ModePair> pairs = biorthogonalize(deep_continuum(), 2);

  ControlTarget t;
  t.Tpp = 0.02 * Mat::Identity(2, 2);
  t.Tmm = -0.015 * Mat::Identity(2, 2);
  t.Tpm = Mat::Zero(2, 2);
  t.Tpm(0, 1) = 0.01;
  t.Tmp = Mat::Zero(2, 2);
  t.Tmp(1, 0) = -0.01;
  HeatSource2D u1 = solve_control(t, pairs, deep_continuum(), 8);

  Simulator sim(grid, prof, 1e-2, u1, HeatSource2D{}, 0.02);
  sim.set_base_state();
  sim.advance(10.0);
  double drift = sim.state_norm();
  double mean0 = std::abs(sim.mean_u());

  Vec X0(4);
  X0 << 0.4, -0.3, 0.2, 0.25;
  sim.set_state_from_slow(X0);
  sim.advance(10.0);
  double meanp = std::abs(sim.mean_u());
  double norm = sim.state_norm();

  bool ok = drift <= 1e-8 && mean0 < 1e-8 && meanp < 1e-8 && std::isfinite(norm) &&
            norm < 1.0;
  report("discrete base state is stationary under control sources", ok, tm.secs(), 120.0,
         fmt("drift %.2e over 10 units, perturbed mean %.2e", drift, meanp));
}

void check_reduced_convergence() {
  Timer tm;
  Grid grid = deep_grid();
  const HeatProfile& prof = deep_discrete();
  std::vector<ModePair> pairs = biorthogonalize(deep_continuum(), 2);
  Vec fp(2), fm(2);
  fp << 0.1, -0.05;
  fm << 0.08, 0.03;
  HeatSource2D eta = solve_forcing(fp, fm, pairs, deep_continuum(), 8);

  const double dt = 0.02;
  Vec X0(4);
  X0 << 0.4, -0.3, 0.2, 0.25;

  std::vector<double> gammas{1e-2, 3e-3, 1e-3};
  std::vector<double> errs, scales;
  for (double gamma : gammas) {
    Simulator sim(grid, prof, gamma, HeatSource2D{}, eta, dt);
    QuadraticSystem Q = sim.reduced_system();
    QuadraticSystem Qs = Q;  // real-time field gamma^2 F(X)
    for (double& v : Qs.K.a) v *= gamma * gamma;
    Qs.M *= gamma * gamma;
    Qs.g *= gamma * gamma;

    const long nsteps = std::lround(1.0 / (10.0 * gamma) / dt);
    const double T = double(nsteps) * dt;
    Trajectory ref = integrate(Qs, X0, T, dt);

    sim.set_state_from_slow(X0);
    double e = 0.0, scale = X0.lpNorm<Eigen::Infinity>();
    long done = 0;
    for (int m = 1; m <= 10; ++m) {
      long upto = std::lround(double(nsteps) * m / 10.0);
      if (upto == done) continue;
      sim.advance(double(upto - done) * dt);
      done = upto;
      const Vec& want = ref.x[size_t(upto)];
      e = std::max(e, (sim.project_slow() - want).lpNorm<Eigen::Infinity>());
      scale = std::max(scale, want.lpNorm<Eigen::Infinity>());
    }
    errs.push_back(e);
    scales.push_back(scale);
  }

  bool mono = errs[0] >= errs[1] && errs[1] >= errs[2];
  bool small = errs[2] <= 0.10 * scales[2];
  std::vector<double> lg, le;
  for (size_t i = 0; i < gammas.size(); ++i) {
    lg.push_back(std::log(gammas[i]));
    le.push_back(std::log(errs[i]));
  }
  double expo = fit_slope(lg, le);
  report("full dynamics converge to the reduced model", mono && small, tm.secs(), 1200.0,
         fmt("errors %.3e / %.3e at the ends, fitted exponent %.2f", errs[0], errs[2], expo));
}

}  // namespace

int main() {
  check_unperturbed_spectrum();
  check_limit_tuning();
  check_spectrum_scan();
  check_gram_identity();
  check_inverse_roundtrips();
  check_sidon_sets();
  check_realized_tracking();
  check_fast_contraction();
  check_discrete_stationarity();
  check_reduced_convergence();
  std::printf("%d of 10 checks passed\n", 10 - g_failures);
  return g_failures;
}

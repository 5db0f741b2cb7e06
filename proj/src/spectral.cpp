#include "marangoni/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace marangoni {

Complex rho_weight(double y, Complex kbar, double h) {
  Complex den = kbar * (1.0 - std::exp(-2.0 * kbar * h));
  if (std::abs(den) == 0.0) fail(ErrorCode::PoleError, "rho_weight at a pole");
  return std::exp(-kbar * y) * (1.0 + std::exp(-2.0 * kbar * (h - y))) / den;
}

Complex psi_k(double y, double k, Complex lambda, double nu, double h) {
  Complex knu = sqrt_re_pos(k * k + lambda / nu);
  if (knu.real() <= 0.0) fail(ErrorCode::BranchError, "Re k_nu <= 0");
  if (std::abs(lambda) >= 1e-4 * nu) {
    Complex a = sinh_ratio(knu * (h - y), knu * h);
    Complex b = sinh_ratio(Complex(k * (h - y)), Complex(k * h));
    return -(nu / lambda) * (a - b);
  }
  // small-lambda branch: the 0/0 cancellation is removed algebraically, so the
  // expression is exact (and reduces to P_k at lambda = 0)
  Complex q = knu + k;
  Complex eps = (lambda / nu) / q;
  Complex den = (1.0 - std::exp(-2.0 * knu * h)) * (1.0 - std::exp(-2.0 * k * h));
  if (std::abs(den) == 0.0) fail(ErrorCode::PoleError, "psi_k at a stream pole");
  Complex R1 = 2.0 * std::exp(-q * (y / 2.0)) * (1.0 - std::exp(-q * (2.0 * h - y))) / den;
  Complex R2 = 2.0 * std::exp(-q * ((2.0 * h - y) / 2.0)) * (1.0 - std::exp(-q * y)) / den;
  Complex Me = -(y / 2.0) * shc(eps * (y / 2.0)) * R1 +
               ((2.0 * h - y) / 2.0) * shc(eps * ((2.0 * h - y) / 2.0)) * R2;
  return -Me / q;
}

ResidualEvaluator::ResidualEvaluator(const HeatProfile& prof, ResidualMode mode)
    : prof_(&prof), mode_(mode) {
  const auto& g = prof.grid();
  uy_.resize(g.nodes.size());
  for (size_t i = 0; i < g.nodes.size(); ++i) uy_[i] = prof.Uy(g.nodes[i]);
}

Complex ResidualEvaluator::operator()(int k, Complex lambda) const {
  const auto& p = prof_->params();
  Complex kbar = sqrt_re_pos(double(k) * k + lambda);
  if (kbar.real() <= 0.0) fail(ErrorCode::BranchError, "Re kbar <= 0");
  if (mode_ == ResidualMode::Limit) {
    Complex pp = double(k) + kbar;
    Complex integral = 2.0 * std::exp(-pp * p.z0) * mollifier_transform(pp, p.kappa) +
                       2.0 * p.mu * tail_transform(pp, p.z0, p.N, p.d);
    return double(k) / kbar * integral - 2.0;
  }
  const auto& g = prof_->grid();
  Complex acc = 0.0;
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    if (uy_[i] == 0.0) continue;
    double y = g.nodes[i];
    acc += g.weights[i] * uy_[i] * psi_k(y, k, lambda, p.nu, p.h) *
           rho_weight(y, kbar, p.h);
  }
  return double(k) * k * acc - 1.0;
}

Complex characteristic_residual(int k, Complex lambda, const HeatProfile& prof,
                                ResidualMode mode) {
  return ResidualEvaluator(prof, mode)(k, lambda);
}

std::vector<double> residual_poles(int k, double h, double re_min) {
  std::vector<double> out;
  for (int n = 0;; ++n) {
    double lam = -double(k) * k - std::pow(n * M_PI / h, 2);
    if (lam < re_min) break;
    out.push_back(lam);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Root scan
// ---------------------------------------------------------------------------

namespace {

struct ScanCtx {
  const std::function<Complex(Complex)>* F;
  long evals = 0;
  long cap = 0;
  // per-walk statistics, reset by winding_number
  double walk_min = 1e300, walk_logacc = 0.0;
  long walk_count = 0;

  Complex eval(Complex z) {
    if (++evals > cap) fail(ErrorCode::BudgetExceeded, "root scan evaluation budget");
    Complex v = (*F)(z);
    double a = std::abs(v);
    if (!std::isfinite(a)) fail(ErrorCode::NaNDetected, "non-finite residual in scan");
    walk_min = std::min(walk_min, a);
    walk_logacc += std::log(std::max(a, 1e-300));
    walk_count++;
    return v;
  }
};

double phase_walk(ScanCtx& ctx, Complex a, Complex b, Complex fa, Complex fb, int depth) {
  // Each top-level segment is split at least once (depth > 0 gate) so a full-turn
  // alias between two samples cannot be accepted as a small increment.
  double dphi = std::arg(fb / fa);
  if (std::abs(dphi) < 0.5 * M_PI * 0.9 && depth > 0) return dphi;
  if (depth > 60) fail(ErrorCode::ContourThroughRoot, "phase tracking failed to resolve");
  Complex m = 0.5 * (a + b);
  Complex fm = ctx.eval(m);
  if (std::abs(fm) < 1e-280) fail(ErrorCode::ContourThroughRoot, "contour hits a zero");
  return phase_walk(ctx, a, m, fa, fm, depth + 1) + phase_walk(ctx, m, b, fm, fb, depth + 1);
}

int winding_number(ScanCtx& ctx, Complex lo, Complex hi) {
  Complex c1 = lo, c2 = Complex(hi.real(), lo.imag());
  Complex c3 = hi, c4 = Complex(lo.real(), hi.imag());
  std::vector<Complex> corners{c1, c2, c3, c4, c1};
  double total = 0.0;
  ctx.walk_min = 1e300;
  ctx.walk_logacc = 0.0;
  ctx.walk_count = 0;
  Complex fprev = ctx.eval(corners[0]);
  Complex fstart = fprev;
  for (int e = 0; e < 4; ++e) {
    Complex a = corners[e], b = corners[e + 1];
    int n0 = 8;
    Complex fa = fprev;
    for (int s = 1; s <= n0; ++s) {
      Complex zb = a + (b - a) * (double(s) / n0);
      Complex fb = (s == n0 && e == 3) ? fstart : ctx.eval(zb);
      total += phase_walk(ctx, a + (b - a) * (double(s - 1) / n0), zb, fa, fb, 0);
      fa = fb;
    }
    fprev = fa;
  }
  // a zero (or near-zero) on the contour invalidates the count
  double geo_mean = std::exp(ctx.walk_logacc / std::max(ctx.walk_count, 1L));
  if (ctx.walk_min < 1e-10 * geo_mean)
    fail(ErrorCode::ContourThroughRoot, "contour passes too close to a zero");
  long w = std::lround(total / (2.0 * M_PI));
  if (std::abs(total - 2.0 * M_PI * w) > 0.25 * M_PI)
    fail(ErrorCode::ContourThroughRoot, "winding not near an integer");
  return (int)w;
}

Complex newton_polish(ScanCtx& ctx, Complex z0, double tol) {
  Complex z = z0;
  for (int it = 0; it < 80; ++it) {
    double st = 1e-7 * std::max(1.0, std::abs(z));
    Complex f = ctx.eval(z);
    Complex fp = (ctx.eval(z + st) - ctx.eval(z - st)) / (2.0 * st);
    if (std::abs(fp) == 0.0) break;
    Complex dz = f / fp;
    z -= dz;
    if (std::abs(dz) < tol * std::max(1.0, std::abs(z))) return z;
  }
  return z;
}

}  // namespace

RootScanResult find_roots(const std::function<Complex(Complex)>& F,
                          const std::vector<Complex>& poles, Complex lo, Complex hi,
                          const RootScanOptions& opt) {
  require(hi.real() > lo.real() && hi.imag() > lo.imag(), ErrorCode::PreconditionError,
          "find_roots box");
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  double sx = hi.real() - lo.real(), sy = hi.imag() - lo.imag();

  ScanCtx ctx{&F, 0, opt.max_evals};

  for (int attempt = 0;; ++attempt) {
    Complex blo = lo, bhi = hi;
    if (attempt > 0) {
      blo += Complex(1e-3 * sx * uni(rng), 1e-3 * sy * uni(rng));
      bhi += Complex(1e-3 * sx * uni(rng), 1e-3 * sy * uni(rng));
    }
    // keep poles safely off the boundary
    for (const Complex& p : poles) {
      if (std::abs(p.real() - blo.real()) < 1e-8 * sx) blo -= Complex(1e-6 * sx, 0);
      if (std::abs(p.real() - bhi.real()) < 1e-8 * sx) bhi += Complex(1e-6 * sx, 0);
      if (std::abs(p.imag() - blo.imag()) < 1e-8 * sy) blo -= Complex(0, 1e-6 * sy);
      if (std::abs(p.imag() - bhi.imag()) < 1e-8 * sy) bhi += Complex(0, 1e-6 * sy);
    }

    try {
      RootScanResult res;
      std::vector<Complex> inside_poles;
      for (const Complex& p : poles)
        if (p.real() > blo.real() && p.real() < bhi.real() && p.imag() > blo.imag() &&
            p.imag() < bhi.imag())
          inside_poles.push_back(p);
      res.poles_inside = (int)inside_poles.size();

      // ---- real-axis sweep (F is real there) ----
      std::vector<Complex> roots;
      if (blo.imag() < 0.0 && bhi.imag() > 0.0) {
        std::vector<double> brk{blo.real(), bhi.real()};
        for (const Complex& p : inside_poles)
          if (std::abs(p.imag()) < 1e-12) brk.push_back(p.real());
        std::sort(brk.begin(), brk.end());
        auto freal = [&](double x) { return ctx.eval(Complex(x, 0.0)).real(); };
        for (size_t s = 0; s + 1 < brk.size(); ++s) {
          double a = brk[s], b = brk[s + 1], L = b - a;
          if (L <= 0) continue;
          std::vector<double> ts;
          for (int i = 1; i <= 32; ++i) ts.push_back(a + L * i / 33.0);
          for (double f : {1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2}) {
            ts.push_back(a + L * f);
            ts.push_back(b - L * f);
          }
          std::sort(ts.begin(), ts.end());
          double xp = ts[0], fp = freal(xp);
          for (size_t i = 1; i < ts.size(); ++i) {
            double xc = ts[i], fc = freal(xc);
            if (fp == 0.0) roots.push_back(Complex(xp, 0.0));
            else if (fp * fc < 0.0) {
              double r = brent([&](double x) { return freal(x); }, xp, xc, 1e-13);
              roots.push_back(Complex(r, 0.0));
            }
            xp = xc;
            fp = fc;
          }
        }
      }

      // ---- total zero count over the box ----
      int W = winding_number(ctx, blo, bhi);
      int Z = W + res.poles_inside;
      if (Z < 0) fail(ErrorCode::PoleError, "zero count negative: pole list incomplete");

      // dedup real roots
      auto dedup = [&](std::vector<Complex>& v) {
        std::sort(v.begin(), v.end(),
                  [](Complex a, Complex b) { return a.real() < b.real(); });
        std::vector<Complex> out;
        for (Complex r : v) {
          bool dup = false;
          for (Complex q : out)
            if (std::abs(q - r) < opt.dedup * std::max(1.0, std::abs(q))) dup = true;
          if (!dup) out.push_back(r);
        }
        v = out;
      };
      dedup(roots);

      // ---- locate any remaining (off-axis) zeros by subdivision ----
      std::function<void(Complex, Complex, int)> locate = [&](Complex l, Complex u, int depth) {
        int zin = winding_number(ctx, l, u);
        for (const Complex& p : inside_poles)
          if (p.real() > l.real() && p.real() < u.real() && p.imag() > l.imag() &&
              p.imag() < u.imag())
            zin++;
        int known = 0;
        for (Complex r : roots)
          if (r.real() > l.real() && r.real() < u.real() && r.imag() > l.imag() &&
              r.imag() < u.imag())
            known++;
        if (zin <= known) return;
        double w = u.real() - l.real(), hgt = u.imag() - l.imag();
        if (std::max(w, hgt) < 1e-6 || depth > 40) {
          Complex r = newton_polish(ctx, 0.5 * (l + u), opt.tol_root * 1e-3);
          roots.push_back(r);
          if (zin > known + 1) locate(l, u, depth + 1);  // remaining multiplicity
          return;
        }
        double fr = 0.5 + 0.07 * uni(rng);
        if (w >= hgt) {
          double xm = l.real() + fr * w;
          for (const Complex& p : inside_poles)
            if (std::abs(p.real() - xm) < 1e-7 * w) xm += 3e-7 * w;
          for (Complex r : roots)
            if (std::abs(r.real() - xm) < 1e-7 * w) xm += 3e-7 * w;
          locate(l, Complex(xm, u.imag()), depth + 1);
          locate(Complex(xm, l.imag()), u, depth + 1);
        } else {
          double ym = l.imag() + fr * hgt;
          for (const Complex& p : inside_poles)
            if (std::abs(p.imag() - ym) < 1e-7 * hgt) ym += 3e-7 * hgt;
          for (Complex r : roots)
            if (std::abs(r.imag() - ym) < 1e-7 * hgt) ym += 3e-7 * hgt;
          locate(l, Complex(u.real(), ym), depth + 1);
          locate(Complex(l.real(), ym), u, depth + 1);
        }
      };
      if ((int)roots.size() != Z) locate(blo, bhi, 0);
      dedup(roots);

      if ((int)roots.size() != Z)
        fail(ErrorCode::ContourThroughRoot, "zero count does not match located roots");

      res.roots = roots;
      res.zero_count = Z;
      res.evals = ctx.evals;
      return res;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ContourThroughRoot || attempt >= opt.max_retries) throw;
      // jitter the box and rescan; the evaluation budget carries over
    }
  }
}

RootScanResult find_roots(int k, const HeatProfile& prof, ResidualMode mode, Complex lo,
                          Complex hi, const RootScanOptions& opt) {
  ResidualEvaluator F(prof, mode);
  std::vector<Complex> poles;
  if (mode == ResidualMode::Finite)
    for (double p : residual_poles(k, prof.params().h, lo.real() - 1.0))
      poles.push_back(Complex(p, 0.0));
  return find_roots([&F, k](Complex z) { return F(k, z); }, poles, lo, hi, opt);
}

SpectrumReport scan_spectrum(const HeatProfile& prof, int kmax, ResidualMode mode,
                             Complex lo, Complex hi, double tol_zero,
                             const RootScanOptions& opt) {
  SpectrumReport rep;
  ResidualEvaluator F(prof, mode);
  double worst_nontuned = lo.real();  // most dangerous Re among non-tuned roots
  bool any_nontuned = false;
  for (int k = 1; k <= kmax; ++k) {
    RootScanOptions ok = opt;
    ok.seed = opt.seed + 1000u * (unsigned)k;
    RootScanResult r = find_roots(k, prof, mode, lo, hi, ok);
    std::vector<RootInfo> infos;
    bool zero_mode = false;
    for (Complex root : r.roots) {
      RootInfo ri;
      ri.lambda = root;
      ri.residual = std::abs(F(k, root));
      infos.push_back(ri);
      if (std::abs(root) < tol_zero) zero_mode = true;
      else {
        any_nontuned = true;
        worst_nontuned = std::max(worst_nontuned, root.real());
      }
    }
    rep.per_k[k] = infos;
    if (zero_mode) rep.zero_modes.push_back(k);
  }
  rep.gap = any_nontuned ? -worst_nontuned : -lo.real();
  return rep;
}

// ---------------------------------------------------------------------------

std::vector<SpectrumEntry> unperturbed_spectrum(double h, double nu, int kmax, int mmax) {
  require(kmax >= 0 && mmax >= 1, ErrorCode::PreconditionError, "unperturbed_spectrum range");
  std::vector<SpectrumEntry> out;
  auto disp = [h](double t) { return std::sin(t * h); };
  std::vector<double> tm(mmax + 1);
  for (int m = 0; m <= mmax; ++m) {
    double c = m * M_PI / h, half = 0.4 * M_PI / h;
    tm[m] = brent(disp, c - half, c + half, 1e-15);
  }
  for (int k = 0; k <= kmax; ++k) {
    for (int m = 0; m <= mmax; ++m)
      out.push_back({k, m, -double(k) * k - tm[m] * tm[m], SpectralFamily::Temperature});
    for (int m = 1; m <= mmax; ++m)
      out.push_back({k, m, -nu * (double(k) * k + tm[m] * tm[m]), SpectralFamily::Flow});
  }
  return out;
}

// ---------------------------------------------------------------------------

Mode build_mode(const HeatProfile& prof, int k) {
  const auto& p = prof.params();
  const double h = p.h;
  Mode m;
  m.k = k;
  double kk = k;
  m.v = [kk, h](double y) { return -kk * mode_s(kk, h, y); };
  m.dv = [kk, h](double y) { return kk * kk * kk * rho_kernel(kk, h, y); };
  m.P = [kk, h](double y) { return mode_P(kk, h, y); };
  m.dP = [kk, h](double y) { return mode_dP(kk, h, y); };
  HeatProfile pr = prof;  // capture a copy (grid + coefficients, cheap)
  BvpSolution th = solve_bvp(prof.grid(), kk, BvpKind::Neumann, [pr, kk, h](double y) {
    return -kk * kk * mode_P(kk, h, y) * pr.Uy(y);
  });
  m.th = [th](double y) { return th.value(y); };
  m.dth = [th](double y) { return th.deriv(y); };
  m.theta0 = th.value(0.0);
  return m;
}

ConjMode build_conjugate_mode(const HeatProfile& prof, int k, double Atilde) {
  const auto& p = prof.params();
  const double h = p.h, nu = p.nu;
  ConjMode c;
  c.k = k;
  c.Atilde = Atilde;
  double kk = k;
  c.tt = [kk, h, Atilde](double y) { return Atilde * kk * rho_kernel(kk, h, y); };
  c.dtt = [kk, h, Atilde](double y) { return -Atilde * kk * mode_s(kk, h, y); };
  HeatProfile pr = prof;
  BvpSolution Phi = solve_bvp(prof.grid(), kk, BvpKind::Dirichlet, [pr, kk, h, Atilde](double y) {
    return Atilde * kk * rho_kernel(kk, h, y) * pr.Uy(y);
  });
  BvpSolution zr = solve_bvp(prof.grid(), kk, BvpKind::Mixed,
                             [Phi, kk](double y) { return kk * Phi.value(y); }, Atilde);
  c.oz = [zr, nu](double y) { return -zr.value(y) / nu; };
  c.doz = [zr, nu](double y) { return -zr.deriv(y) / nu; };
  c.zr0 = zr.value(0.0);
  return c;
}

std::vector<ModePair> biorthogonalize(const HeatProfile& prof, int N) {
  std::vector<ModePair> out;
  const auto& g = prof.grid();
  for (int k = 1; k <= N; ++k) {
    ModePair mp;
    mp.mode = build_mode(prof, k);
    ConjMode raw = build_conjugate_mode(prof, k, 1.0);
    double gram = M_PI * g.integrate([&](double y) {
      return mp.mode.v(y) * raw.oz(y) + mp.mode.th(y) * raw.tt(y);
    });
    if (std::abs(gram) < 1e-12)
      fail(ErrorCode::DegeneratePairing, "mode pairing degenerate at k=" + std::to_string(k));
    mp.conj = build_conjugate_mode(prof, k, 1.0 / gram);
    mp.gram = gram;
    out.push_back(std::move(mp));
  }
  return out;
}

}  // namespace marangoni

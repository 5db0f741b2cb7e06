#include "marangoni/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace marangoni {

const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::PreconditionError: return "PreconditionError";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::GapViolation: return "GapViolation";
    case ErrorCode::BranchError: return "BranchError";
    case ErrorCode::PoleError: return "PoleError";
    case ErrorCode::ContourThroughRoot: return "ContourThroughRoot";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::BVPSingular: return "BVPSingular";
    case ErrorCode::DegeneratePairing: return "DegeneratePairing";
    case ErrorCode::SupportViolation: return "SupportViolation";
    case ErrorCode::MeanViolation: return "MeanViolation";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::PivotUnderflow: return "PivotUnderflow";
    case ErrorCode::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorCode::CFLViolation: return "CFLViolation";
    case ErrorCode::NaNDetected: return "NaNDetected";
    case ErrorCode::DecompositionFailed: return "DecompositionFailed";
    case ErrorCode::MismatchedBases: return "MismatchedBases";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::Blowup: return "Blowup";
  }
  return "UnknownError";
}

// ---------------------------------------------------------------------------

double legendre_eval(int n, double x) {
  if (n == 0) return 1.0;
  double pm = 1.0, p = x;
  for (int j = 2; j <= n; ++j) {
    double pn = ((2 * j - 1) * x * p - (j - 1) * pm) / j;
    pm = p;
    p = pn;
  }
  return p;
}

const GLRule& gauss_legendre(int n) {
  static std::map<int, GLRule> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  require(n >= 1, ErrorCode::PreconditionError, "gauss_legendre n >= 1");

  GLRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) {
    // Newton on P_n from the Chebyshev-like initial guess
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it2 = 0; it2 < 100; ++it2) {
      double pm = 1.0, p = x;
      for (int j = 2; j <= n; ++j) {
        double pn = ((2 * j - 1) * x * p - (j - 1) * pm) / j;
        pm = p;
        p = pn;
      }
      dp = n * (x * p - pm) / (x * x - 1.0);
      double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.x[n - 1 - i] = x;  // store increasing
    r.w[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  auto [pos, ok] = cache.emplace(n, std::move(r));
  (void)ok;
  return pos->second;
}

std::vector<double> geometric_edges(double a, double b, int n, double w0) {
  require(b > a && n >= 1 && w0 > 0, ErrorCode::PreconditionError, "geometric_edges");
  const double L = b - a;
  std::vector<double> e(n + 1);
  if (w0 * n >= L) {
    for (int i = 0; i <= n; ++i) e[i] = a + L * i / n;
    return e;
  }
  // solve w0 (r^n - 1)/(r - 1) = L for r > 1 by bisection
  double lo = 1.0 + 1e-12, hi = 2.0;
  auto len = [&](double r) { return w0 * (std::pow(r, n) - 1.0) / (r - 1.0); };
  while (len(hi) < L) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (len(mid) < L ? lo : hi) = mid;
  }
  double r = 0.5 * (lo + hi);
  e[0] = a;
  double w = w0;
  for (int i = 1; i <= n; ++i) {
    e[i] = e[i - 1] + w;
    w *= r;
  }
  e[n] = b;  // absorb rounding
  return e;
}

CompositeGrid make_grid(const std::vector<double>& edges, int npp) {
  require(edges.size() >= 2, ErrorCode::PreconditionError, "make_grid needs >= 2 edges");
  for (size_t i = 1; i < edges.size(); ++i)
    require(edges[i] > edges[i - 1], ErrorCode::PreconditionError, "edges must increase");
  const GLRule& rule = gauss_legendre(npp);
  CompositeGrid g;
  g.nodes_per_panel = npp;
  for (size_t i = 0; i + 1 < edges.size(); ++i) {
    Panel p{edges[i], edges[i + 1], (int)g.nodes.size()};
    double c = 0.5 * (p.a + p.b), s = 0.5 * (p.b - p.a);
    for (int q = 0; q < npp; ++q) {
      g.nodes.push_back(c + s * rule.x[q]);
      g.weights.push_back(s * rule.w[q]);
    }
    g.panels.push_back(p);
  }
  return g;
}

CompositeGrid make_profile_grid(double h, double z0, double kappa, int npp) {
  require(h > 0 && kappa > 0 && z0 > kappa && z0 + kappa < h, ErrorCode::PreconditionError,
          "profile grid: need 0 < kappa < z0 and z0 + kappa < h");
  const double d1 = z0 - kappa;
  std::vector<double> edges;
  auto push_uniform = [&](double a, double b, int n) {
    for (int i = 0; i < n; ++i) edges.push_back(a + (b - a) * i / n);
  };
  push_uniform(0.0, d1, 4);
  push_uniform(d1, z0, 8);
  push_uniform(z0, z0 + kappa, 8);
  auto tail = geometric_edges(z0 + kappa, h, 44, 0.5 * kappa);
  edges.insert(edges.end(), tail.begin(), tail.end());
  return make_grid(edges, npp);
}

double CompositeGrid::integrate(const std::function<double(double)>& f) const {
  double s = 0.0;
  for (size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
  return s;
}

Complex CompositeGrid::integrate_c(const std::function<Complex(double)>& f) const {
  Complex s = 0.0;
  for (size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
  return s;
}

double CompositeGrid::integrate_nodal(const std::vector<double>& vals) const {
  require(vals.size() == nodes.size(), ErrorCode::MismatchedBases, "nodal integrand size");
  double s = 0.0;
  for (size_t i = 0; i < nodes.size(); ++i) s += weights[i] * vals[i];
  return s;
}

int CompositeGrid::panel_of(double y) const {
  if (y <= panels.front().a) return 0;
  if (y >= panels.back().b) return (int)panels.size() - 1;
  int lo = 0, hi = (int)panels.size() - 1;
  while (lo < hi) {
    int mid = (lo + hi) / 2;
    if (y < panels[mid].a)
      hi = mid - 1;
    else if (y > panels[mid].b)
      lo = mid + 1;
    else
      return mid;
  }
  return lo;
}

// ---------------------------------------------------------------------------

Complex shc(Complex z) {
  if (std::abs(z) < 1e-2) {
    Complex z2 = z * z;
    return 1.0 + z2 / 6.0 * (1.0 + z2 / 20.0 * (1.0 + z2 / 42.0));
  }
  return std::sinh(z) / z;
}

double shc(double z) {
  if (std::abs(z) < 1e-2) {
    double z2 = z * z;
    return 1.0 + z2 / 6.0 * (1.0 + z2 / 20.0 * (1.0 + z2 / 42.0));
  }
  return std::sinh(z) / z;
}

Complex sinh_ratio(Complex a, Complex b) {
  // e^{a-b} (1 - e^{-2a}) / (1 - e^{-2b}); callers guarantee Re a >= 0, Re b > 0
  Complex den = 1.0 - std::exp(-2.0 * b);
  if (std::abs(den) == 0.0) fail(ErrorCode::PoleError, "sinh_ratio at a zero of sinh");
  return std::exp(a - b) * (1.0 - std::exp(-2.0 * a)) / den;
}

double sinh_ratio(double a, double b) {
  double den = -std::expm1(-2.0 * b);
  if (den == 0.0) fail(ErrorCode::PoleError, "sinh_ratio at zero denominator");
  return std::exp(a - b) * (-std::expm1(-2.0 * a)) / den;
}

Complex cosh_sinh_ratio(Complex a, Complex b) {
  Complex den = 1.0 - std::exp(-2.0 * b);
  if (std::abs(den) == 0.0) fail(ErrorCode::PoleError, "cosh_sinh_ratio at a zero of sinh");
  return std::exp(a - b) * (1.0 + std::exp(-2.0 * a)) / den;
}

Complex sqrt_re_pos(Complex z) {
  Complex r = std::sqrt(z);
  if (r.real() < 0.0 || (r.real() == 0.0 && r.imag() < 0.0)) r = -r;
  return r;
}

// ---------------------------------------------------------------------------

double brent(const std::function<double(double)>& f, double a, double b, double tol, int maxit) {
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  require(fa * fb < 0.0, ErrorCode::PreconditionError, "brent: no sign change");
  double c = a, fc = fa, d = b - a, e = d;
  for (int it = 0; it < maxit; ++it) {
    if (std::abs(fc) < std::abs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    double tol1 = 2.0 * 1e-16 * std::abs(b) + 0.5 * tol;
    double xm = 0.5 * (c - b);
    if (std::abs(xm) <= tol1 || fb == 0.0) return b;
    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      double s = fb / fa, p, q;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        double qq = fa / fc, r = fb / fc;
        p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
        q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += (std::abs(d) > tol1) ? d : (xm > 0 ? tol1 : -tol1);
    fb = f(b);
    if ((fb > 0) == (fc > 0)) {
      c = a;
      fc = fa;
      d = b - a;
      e = d;
    }
  }
  fail(ErrorCode::NonConvergence, "brent exceeded iteration budget");
}

NewtonResult damped_newton(const std::function<std::vector<double>(const std::vector<double>&)>& F,
                           std::vector<double> x0, double tol, int maxit, double fd_step,
                           int max_halvings) {
  const int n = (int)x0.size();
  auto norm = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double t : v) m = std::max(m, std::abs(t));
    return m;
  };
  NewtonResult res;
  res.x = x0;
  std::vector<double> r = F(res.x);
  double rn = norm(r);
  for (int it = 0; it < maxit; ++it) {
    res.iters = it;
    res.resid_norm = rn;
    if (rn < tol) {
      res.converged = true;
      return res;
    }
    // central-difference Jacobian
    std::vector<std::vector<double>> J(n, std::vector<double>(n));
    for (int j = 0; j < n; ++j) {
      auto xp = res.x, xm = res.x;
      xp[j] += fd_step;
      xm[j] -= fd_step;
      auto fp = F(xp), fm = F(xm);
      for (int i = 0; i < n; ++i) J[i][j] = (fp[i] - fm[i]) / (2.0 * fd_step);
    }
    // LU with partial pivoting on the small dense J, solve J dx = r
    std::vector<int> piv(n);
    for (int i = 0; i < n; ++i) piv[i] = i;
    auto A = J;
    std::vector<double> rhs = r;
    for (int c = 0; c < n; ++c) {
      int p = c;
      for (int i = c + 1; i < n; ++i)
        if (std::abs(A[i][c]) > std::abs(A[p][c])) p = i;
      std::swap(A[c], A[p]);
      std::swap(rhs[c], rhs[p]);
      if (A[c][c] == 0.0) fail(ErrorCode::BVPSingular, "newton: singular jacobian");
      for (int i = c + 1; i < n; ++i) {
        double m = A[i][c] / A[c][c];
        for (int j = c; j < n; ++j) A[i][j] -= m * A[c][j];
        rhs[i] -= m * rhs[c];
      }
    }
    std::vector<double> dx(n);
    for (int i = n - 1; i >= 0; --i) {
      double s = rhs[i];
      for (int j = i + 1; j < n; ++j) s -= A[i][j] * dx[j];
      dx[i] = s / A[i][i];
    }
    // damping: halve until the residual decreases
    double step = 1.0;
    bool accepted = false;
    for (int hv = 0; hv <= max_halvings; ++hv) {
      std::vector<double> xt(n);
      for (int i = 0; i < n; ++i) xt[i] = res.x[i] - step * dx[i];
      auto rt = F(xt);
      double rtn = norm(rt);
      if (rtn < rn || rtn < tol) {
        res.x = xt;
        r = rt;
        rn = rtn;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.resid_norm = rn;
      return res;  // stalled; caller decides (ladder retry etc.)
    }
  }
  res.resid_norm = rn;
  res.converged = rn < tol;
  return res;
}

// ---------------------------------------------------------------------------

std::vector<double> elementary_symmetric(const std::vector<double>& c) {
  std::vector<double> e(c.size() + 1, 0.0);
  e[0] = 1.0;
  for (size_t i = 0; i < c.size(); ++i)
    for (size_t j = i + 1; j >= 1; --j) e[j] += c[i] * e[j - 1];
  return e;
}

double poly_eval(const std::vector<double>& coeff, double y) {
  double s = 0.0;
  for (size_t j = coeff.size(); j-- > 0;) s = s * y + coeff[j];
  return s;
}

double poly_deriv(const std::vector<double>& coeff, double y) {
  double s = 0.0;
  for (size_t j = coeff.size(); j-- > 1;) s = s * y + coeff[j] * (double)j;
  return s;
}

}  // namespace marangoni

#include "marangoni/profile.hpp"

#include <cmath>

namespace marangoni {

namespace {

// quadrature rule for integrals of the unit bump over (-1,1); edges crowd toward
// the endpoints where all derivatives vanish
const CompositeGrid& bump_rule() {
  static CompositeGrid g = make_grid(
      {-1.0, -0.999, -0.99, -0.95, -0.8, -0.5, 0.0, 0.5, 0.8, 0.95, 0.99, 0.999, 1.0}, 16);
  return g;
}

double bump(double t) {
  double s = 1.0 - t * t;
  if (s <= 0.0) return 0.0;
  return std::exp(-1.0 / s);
}

double bump_norm() {
  static double C = [] {
    double I = bump_rule().integrate([](double t) { return bump(t); });
    return 1.0 / I;
  }();
  return C;
}

}  // namespace

std::vector<double> corrector_coeffs(int N, const std::vector<double>& d) {
  require(N >= 1 && (int)d.size() == N, ErrorCode::PreconditionError, "corrector_coeffs sizes");
  std::vector<double> c(N);
  for (int j = 1; j <= N; ++j) {
    double den = 2.0 * j + d[j - 1];
    require(den != 0.0, ErrorCode::PreconditionError, "corrector pole 2j + d_j = 0");
    c[j - 1] = 1.0 / den;
  }
  std::vector<double> e = elementary_symmetric(c);
  std::vector<double> b(N + 1);
  double fact = 1.0;  // (j+1)!
  for (int j = 0; j <= N; ++j) {
    fact *= (j + 1);
    double sgn = (j % 2 == 0) ? -1.0 : 1.0;  // (-1)^{j+1}
    b[j] = sgn * e[N - j] / fact;
  }
  return b;
}

double corrector_transform(double p, int N, const std::vector<double>& d) {
  require(p > 0.0, ErrorCode::PreconditionError, "corrector_transform p > 0");
  double prod = (N % 2 == 0) ? -1.0 : 1.0;  // (-1)^{N+1}
  for (int j = 1; j <= N; ++j) prod *= (1.0 / p - 1.0 / (2.0 * j + d[j - 1]));
  return prod / (p * p);
}

template <class T>
static T tail_transform_impl(T p, double z0, int N, const std::vector<double>& d) {
  // int_{z0}^inf y^{j+1} e^{-p y} dy = ((j+1)!/p^{j+2}) e^{-p z0} sum_{i<=j+1} (p z0)^i / i!
  std::vector<double> b = corrector_coeffs(N, d);
  T s = 0.0;
  T ez = std::exp(-p * z0);
  double fact = 1.0;
  T pz = p * z0;
  for (int j = 0; j <= N; ++j) {
    fact *= (j + 1);
    T head = 0.0, term = 1.0;
    for (int i = 0; i <= j + 1; ++i) {
      head += term;
      term *= pz / double(i + 1);
    }
    s += b[j] * fact * std::pow(p, -(j + 2)) * ez * head;
  }
  return s;
}

double tail_transform(double p, double z0, int N, const std::vector<double>& d) {
  return tail_transform_impl<double>(p, z0, N, d);
}
Complex tail_transform(Complex p, double z0, int N, const std::vector<double>& d) {
  return tail_transform_impl<Complex>(p, z0, N, d);
}

double mollifier_value(double z, double kappa) {
  double t = z / kappa;
  double s = 1.0 - t * t;
  if (s <= 0.0) return 0.0;
  return bump_norm() / kappa * std::exp(-1.0 / s);
}

double mollifier_transform(double p, double kappa) {
  double C = bump_norm();
  return bump_rule().integrate([&](double t) { return C * bump(t) * std::exp(-p * kappa * t); });
}

Complex mollifier_transform(Complex p, double kappa) {
  double C = bump_norm();
  return bump_rule().integrate_c(
      [&](double t) { return C * bump(t) * std::exp(-p * kappa * t); });
}

double g_deficit(double p, double kappa, double z0) {
  return -1.0 + std::exp(-p * z0) * mollifier_transform(p, kappa);
}

Complex g_deficit(Complex p, double kappa, double z0) {
  return -1.0 + std::exp(-p * z0) * mollifier_transform(p, kappa);
}

// ---------------------------------------------------------------------------

HeatProfile::HeatProfile(const ProfileParams& params) : p_(params) {
  require(p_.N >= 1, ErrorCode::PreconditionError, "profile N >= 1");
  require(p_.kappa > 0 && p_.z0 > p_.kappa && p_.z0 + p_.kappa < p_.h,
          ErrorCode::PreconditionError, "profile needs 0 < kappa < z0, z0 + kappa < h");
  require((int)p_.d.size() == p_.N, ErrorCode::PreconditionError, "profile d size");
  require(p_.mu > 0.0, ErrorCode::PreconditionError, "profile mu > 0");
  b_ = corrector_coeffs(p_.N, p_.d);
  grid_ = make_profile_grid(p_.h, p_.z0, p_.kappa);
  // cumulative U at panel edges
  Ucum_.assign(grid_.panels.size() + 1, 0.0);
  const GLRule& rule = gauss_legendre(grid_.nodes_per_panel);
  (void)rule;
  for (size_t i = 0; i < grid_.panels.size(); ++i) {
    const Panel& pan = grid_.panels[i];
    double s = 0.0;
    for (int q = 0; q < grid_.nodes_per_panel; ++q)
      s += grid_.weights[pan.first + q] * Uy(grid_.nodes[pan.first + q]);
    Ucum_[i + 1] = Ucum_[i] + s;
  }
}

double HeatProfile::W(double y) const { return poly_eval(b_, y); }

double HeatProfile::Uy(double y) const {
  double v = 0.0;
  double m = mollifier_value(y - p_.z0, p_.kappa);
  if (m != 0.0) v += 2.0 / y * m;
  if (y > p_.z0) v += 2.0 * p_.mu * W(y);
  return v;
}

double HeatProfile::U(double y) const {
  if (y <= delta1()) return 0.0;
  if (y >= p_.h) return Ucum_.back();
  int pi = grid_.panel_of(y);
  const Panel& pan = grid_.panels[pi];
  const GLRule& rule = gauss_legendre(grid_.nodes_per_panel);
  double c = 0.5 * (pan.a + y), s = 0.5 * (y - pan.a), acc = Ucum_[pi];
  for (size_t q = 0; q < rule.x.size(); ++q) acc += s * rule.w[q] * Uy(c + s * rule.x[q]);
  return acc;
}

// ---------------------------------------------------------------------------

double mode_s(double k, double h, double y) { return sinh_ratio(k * (h - y), k * h); }

double mode_P(double k, double h, double y) {
  double E = std::exp(-2.0 * k * h);
  double t1 = y * std::exp(-k * y) * (1.0 + std::exp(-2.0 * k * (h - y))) / (2.0 * k * (1.0 - E));
  double t2 = h * std::exp(-k * (2.0 * h - y)) * (-std::expm1(-2.0 * k * y)) /
              (k * (1.0 - E) * (1.0 - E));
  return t1 - t2;
}

double mode_dP(double k, double h, double y) {
  // derivative of the expression above
  double E = std::exp(-2.0 * k * h);
  double A = std::exp(-k * y), B = std::exp(-2.0 * k * (h - y));
  double den1 = 2.0 * k * (1.0 - E);
  double t1 = (A * (1.0 + B) + y * (-k * A * (1.0 + B) + A * 2.0 * k * B)) / den1;
  double den2 = k * (1.0 - E) * (1.0 - E);
  double C = std::exp(-k * (2.0 * h - y)), D = -std::expm1(-2.0 * k * y);
  double t2 = h * (k * C * D + C * (2.0 * k * std::exp(-2.0 * k * y))) / den2;
  return t1 - t2;
}

double rho_kernel(double k, double h, double y) {
  double E = std::exp(-2.0 * k * h);
  return std::exp(-k * y) * (1.0 + std::exp(-2.0 * k * (h - y))) / (k * (1.0 - E));
}

std::vector<double> limit_residuals(const ProfileParams& p, double mu,
                                    const std::vector<double>& d, int count) {
  std::vector<double> r(count);
  for (int k = 1; k <= count; ++k) {
    double pp = 2.0 * k;
    r[k - 1] = g_deficit(pp, p.kappa, p.z0) + mu * tail_transform(pp, p.z0, p.N, d);
  }
  return r;
}

std::vector<double> finite_residuals(const ProfileParams& p, double mu,
                                     const std::vector<double>& d, int count) {
  ProfileParams q = p;
  q.mu = mu;
  q.d = d;
  HeatProfile prof(q);
  const CompositeGrid& g = prof.grid();
  std::vector<double> r(count);
  for (int k = 1; k <= count; ++k) {
    double integral = g.integrate([&](double y) {
      return mode_P(k, p.h, y) * rho_kernel(k, p.h, y) * prof.Uy(y);
    });
    r[k - 1] = k * k * integral - 1.0;
  }
  return r;
}

TuneResult tune_d(ProfileParams params, TuneMode mode, double mu_in) {
  const int N = params.N;
  require(N >= 1 && N <= 8, ErrorCode::PreconditionError, "tune_d N in 1..8");

  auto resid_limit = [&](double mu) {
    return [&, mu](const std::vector<double>& d) { return limit_residuals(params, mu, d, N); };
  };
  auto resid_finite = [&](double mu) {
    return [&, mu](const std::vector<double>& d) { return finite_residuals(params, mu, d, N); };
  };

  double mu_auto;
  if (mu_in > 0.0) {
    mu_auto = mu_in;
  } else {
    std::vector<double> d0(N, 0.0);
    double T = tail_transform(2.0 * N, params.z0, N, d0);
    require(T != 0.0, ErrorCode::PreconditionError, "degenerate corrector tail at d = 0");
    mu_auto = -g_deficit(2.0 * N, params.kappa, params.z0) / T;
    require(mu_auto > 0.0, ErrorCode::NonConvergence, "automatic mu came out non-positive");
  }

  // ladder of mu candidates around the automatic value
  std::vector<double> ladder{mu_auto};
  for (int m = 1; m <= 12; ++m) {
    ladder.push_back(mu_auto * std::pow(1.25, m));
    ladder.push_back(mu_auto * std::pow(1.25, -m));
  }

  const double tol = 1e-13;
  for (double mu : ladder) {
    std::vector<double> d0(N, 0.0);
    NewtonResult lim = damped_newton(resid_limit(mu), d0, tol);
    if (!lim.converged) continue;
    bool in_range = true;
    for (double dj : lim.x) in_range = in_range && std::abs(dj) < 0.5;
    if (!in_range) continue;

    NewtonResult fin;
    if (mode == TuneMode::Finite) {
      fin = damped_newton(resid_finite(mu), lim.x, tol);
      if (!fin.converged) continue;
      in_range = true;
      for (double dj : fin.x) in_range = in_range && std::abs(dj) < 0.5;
      if (!in_range) continue;
    }

    const NewtonResult& best = (mode == TuneMode::Finite) ? fin : lim;
    TuneResult out;
    out.mu = mu;
    out.d = best.x;
    out.resid_norm = best.resid_norm;
    out.iters = best.iters;
    ProfileParams q = params;
    q.mu = mu;
    q.d = best.x;
    out.profile = HeatProfile(q);
    std::vector<double> all = (mode == TuneMode::Finite)
                                  ? finite_residuals(params, mu, best.x, 12)
                                  : limit_residuals(params, mu, best.x, 12);
    for (int k = N + 1; k <= 12; ++k) out.separation.push_back(std::abs(all[k - 1]));
    return out;
  }
  fail(ErrorCode::NonConvergence, "tune_d: no mu ladder rung converged with |d_j| < 1/2");
}

}  // namespace marangoni

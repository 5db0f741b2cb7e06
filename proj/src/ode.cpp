#include "marangoni/ode.hpp"

#include <algorithm>
#include <cmath>

namespace marangoni {

namespace {

void check_finite(const std::vector<double>& y) {
  for (double v : y)
    if (!std::isfinite(v)) fail(ErrorCode::NaNDetected, "non-finite state in integrator");
}

// cubic Hermite on [t0, t1] given endpoint values and slopes
double hermite(double t, double t0, double t1, double y0, double y1, double f0, double f1) {
  double dt = t1 - t0, s = (t - t0) / dt;
  double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
  double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
  return h00 * y0 + h10 * dt * f0 + h01 * y1 + h11 * dt * f1;
}

}  // namespace

OdeOutput rk45(const OdeRhs& f, double t0, double t1, std::vector<double> y0,
               const std::vector<double>& t_out, double rtol, double atol, int max_steps) {
  // Dormand-Prince coefficients
  static const double c2 = 1. / 5, c3 = 3. / 10, c4 = 4. / 5, c5 = 8. / 9;
  static const double a21 = 1. / 5;
  static const double a31 = 3. / 40, a32 = 9. / 40;
  static const double a41 = 44. / 45, a42 = -56. / 15, a43 = 32. / 9;
  static const double a51 = 19372. / 6561, a52 = -25360. / 2187, a53 = 64448. / 6561,
                      a54 = -212. / 729;
  static const double a61 = 9017. / 3168, a62 = -355. / 33, a63 = 46732. / 5247, a64 = 49. / 176,
                      a65 = -5103. / 18656;
  static const double b1 = 35. / 384, b3 = 500. / 1113, b4 = 125. / 192, b5 = -2187. / 6784,
                      b6 = 11. / 84;
  static const double e1 = 71. / 57600, e3 = -71. / 16695, e4 = 71. / 1920, e5 = -17253. / 339200,
                      e6 = 22. / 525, e7 = -1. / 40;

  const int n = (int)y0.size();
  OdeOutput out;
  out.t = t_out;
  out.y.reserve(t_out.size());
  size_t next_out = 0;

  std::vector<double> y = y0, k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), yt(n), ynew(n);
  double t = t0;
  f(t, y, k1);
  out.rhs_evals++;
  while (next_out < t_out.size() && t_out[next_out] <= t0 + 1e-300) {
    out.y.push_back(y);
    next_out++;
  }
  double dt = (t1 - t0) * 1e-4;
  if (dt <= 0) fail(ErrorCode::PreconditionError, "rk45 needs t1 > t0");

  while (t < t1) {
    if (out.steps++ > max_steps) fail(ErrorCode::BudgetExceeded, "rk45 step budget");
    dt = std::min(dt, t1 - t);
    if (dt < 1e-14 * std::max(1.0, std::abs(t)))
      fail(ErrorCode::StepSizeUnderflow, "rk45 step too small");

    auto stage = [&](std::vector<double>& kk, double ct, auto... terms) {
      // yt = y + dt * sum(terms)
      for (int i = 0; i < n; ++i) yt[i] = y[i];
      auto add = [&](double coef, const std::vector<double>& kv) {
        for (int i = 0; i < n; ++i) yt[i] += dt * coef * kv[i];
      };
      (add(terms.first, *terms.second), ...);
      f(t + ct * dt, yt, kk);
      out.rhs_evals++;
    };
    using P = std::pair<double, const std::vector<double>*>;
    stage(k2, c2, P{a21, &k1});
    stage(k3, c3, P{a31, &k1}, P{a32, &k2});
    stage(k4, c4, P{a41, &k1}, P{a42, &k2}, P{a43, &k3});
    stage(k5, c5, P{a51, &k1}, P{a52, &k2}, P{a53, &k3}, P{a54, &k4});
    stage(k6, 1.0, P{a61, &k1}, P{a62, &k2}, P{a63, &k3}, P{a64, &k4}, P{a65, &k5});
    for (int i = 0; i < n; ++i)
      ynew[i] = y[i] + dt * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    f(t + dt, ynew, k7);
    out.rhs_evals++;

    double err = 0.0;
    for (int i = 0; i < n; ++i) {
      double e = dt * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      err = std::max(err, std::abs(e) / sc);
    }
    if (err <= 1.0) {
      check_finite(ynew);
      double tnew = t + dt;
      while (next_out < t_out.size() && t_out[next_out] <= tnew + 1e-300) {
        double ts = std::min(t_out[next_out], tnew);
        std::vector<double> ys(n);
        for (int i = 0; i < n; ++i) ys[i] = hermite(ts, t, tnew, y[i], ynew[i], k1[i], k7[i]);
        out.y.push_back(std::move(ys));
        next_out++;
      }
      t = tnew;
      y = ynew;
      k1 = k7;  // FSAL
    }
    double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
    dt *= std::clamp(fac, 0.2, 5.0);
  }
  while (next_out < t_out.size()) {  // trailing samples at t1 within rounding
    out.y.push_back(y);
    next_out++;
  }
  return out;
}

OdeOutput imex_theta(const OdeRhs& g, const std::vector<double>& a_diag, double t0, double t1,
                     std::vector<double> y0, double dt, const std::vector<double>& t_out,
                     double theta) {
  const int n = (int)y0.size();
  require((int)a_diag.size() == n && dt > 0, ErrorCode::PreconditionError, "imex_theta sizes");
  OdeOutput out;
  out.t = t_out;
  size_t next_out = 0;
  std::vector<double> y = y0, gy(n), gprev(n), ynew(n), gext(n);
  double t = t0;
  g(t, y, gy);
  out.rhs_evals++;
  auto emit_until = [&](double tnew, const std::vector<double>& ynew_) {
    while (next_out < t_out.size() && t_out[next_out] <= tnew + 1e-12 * std::max(1.0, tnew)) {
      // linear interpolation inside the fixed step
      double s = std::clamp((t_out[next_out] - t) / dt, 0.0, 1.0);
      std::vector<double> ys(n);
      for (int i = 0; i < n; ++i) ys[i] = (1 - s) * y[i] + s * ynew_[i];
      out.y.push_back(std::move(ys));
      next_out++;
    }
  };
  while (next_out < t_out.size() && t_out[next_out] <= t0 + 1e-300) {
    out.y.push_back(y);
    next_out++;
  }
  bool first = true;
  long total = std::lround((t1 - t0) / dt);
  for (long s = 0; s < total; ++s) {
    if (first) {
      // Heun predictor-corrector on g, theta-implicit diagonal
      std::vector<double> ypred(n);
      for (int i = 0; i < n; ++i) {
        double den = 1.0 - dt * theta * a_diag[i];
        ypred[i] = (y[i] + dt * ((1.0 - theta) * a_diag[i] * y[i] + gy[i])) / den;
      }
      std::vector<double> gp(n);
      g(t + dt, ypred, gp);
      out.rhs_evals++;
      for (int i = 0; i < n; ++i) {
        double den = 1.0 - dt * theta * a_diag[i];
        ynew[i] =
            (y[i] + dt * ((1.0 - theta) * a_diag[i] * y[i] + 0.5 * (gy[i] + gp[i]))) / den;
      }
      first = false;
    } else {
      for (int i = 0; i < n; ++i) gext[i] = 1.5 * gy[i] - 0.5 * gprev[i];
      for (int i = 0; i < n; ++i) {
        double den = 1.0 - dt * theta * a_diag[i];
        ynew[i] = (y[i] + dt * ((1.0 - theta) * a_diag[i] * y[i] + gext[i])) / den;
      }
    }
    check_finite(ynew);
    emit_until(t + dt, ynew);
    gprev = gy;
    y = ynew;
    t = t0 + (s + 1) * dt;
    g(t, y, gy);
    out.rhs_evals++;
    out.steps++;
  }
  while (next_out < t_out.size()) {
    out.y.push_back(y);
    next_out++;
  }
  return out;
}

}  // namespace marangoni

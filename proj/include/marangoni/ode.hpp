#pragma once

#include <functional>
#include <vector>

#include "marangoni/errors.hpp"

namespace marangoni {

using OdeRhs = std::function<void(double t, const std::vector<double>& y, std::vector<double>& dy)>;

struct OdeOutput {
  std::vector<double> t;
  std::vector<std::vector<double>> y;  // y[i] at t[i]
  int steps = 0;
  int rhs_evals = 0;
};

// Adaptive Dormand-Prince 5(4). Output is sampled at the requested times
// (cubic Hermite between accepted steps); t_out must be increasing within [t0, t1].
OdeOutput rk45(const OdeRhs& f, double t0, double t1, std::vector<double> y0,
               const std::vector<double>& t_out, double rtol = 1e-10, double atol = 1e-12,
               int max_steps = 50'000'000);

// Fixed-step IMEX theta scheme for y' = a .* y + g(t, y) with stiff diagonal a:
// theta-implicit on the diagonal, two-step Adams-Bashforth on g (Heun start).
OdeOutput imex_theta(const OdeRhs& g, const std::vector<double>& a_diag, double t0, double t1,
                     std::vector<double> y0, double dt, const std::vector<double>& t_out,
                     double theta = 0.5);

}  // namespace marangoni

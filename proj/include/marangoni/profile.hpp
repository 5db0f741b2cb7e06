#pragma once

#include <vector>

#include "marangoni/numerics.hpp"

namespace marangoni {

// Heat profile: U_y(y) = (2/y) delta_kappa(y - z0) + 2 mu chi(y - z0) W_N(y; d),
// U(y) = int_0^y U_y. U and U_y vanish on [0, delta1], delta1 = z0 - kappa.
// W_N is the degree-N corrector polynomial whose coefficients are fixed by d.

struct ProfileParams {
  int N = 1;
  double kappa = 0.02;
  double z0 = 0.1;   // default 5 kappa
  double mu = 0.0;   // <= 0 requests the automatic choice during tuning
  double h = 10.0;
  double nu = 100.0;
  std::vector<double> d;  // N entries
};

// corrector coefficients b_0..b_N from the gap parameters d_1..d_N
std::vector<double> corrector_coeffs(int N, const std::vector<double>& d);

// G(p; d) = int_0^inf y W_N e^{-p y} dy (closed form, zero at p = 2j + d_j)
double corrector_transform(double p, int N, const std::vector<double>& d);

// int_{z0}^inf y W_N e^{-p y} dy (closed form), real and complex p
double tail_transform(double p, double z0, int N, const std::vector<double>& d);
Complex tail_transform(Complex p, double z0, int N, const std::vector<double>& d);

// normalized mollifier and its Laplace-type transform m(p) = int delta_kappa(s) e^{-p s} ds
double mollifier_value(double z, double kappa);
double mollifier_transform(double p, double kappa);
Complex mollifier_transform(Complex p, double kappa);

// deficit g(p) = -1 + e^{-p z0} m(p)
double g_deficit(double p, double kappa, double z0);
Complex g_deficit(Complex p, double kappa, double z0);

class HeatProfile {
public:
  HeatProfile() = default;
  explicit HeatProfile(const ProfileParams& params);

  const ProfileParams& params() const { return p_; }
  const std::vector<double>& b() const { return b_; }
  const CompositeGrid& grid() const { return grid_; }
  double delta1() const { return p_.z0 - p_.kappa; }

  double W(double y) const;
  double Uy(double y) const;
  double U(double y) const;

private:
  ProfileParams p_;
  std::vector<double> b_;
  CompositeGrid grid_;
  std::vector<double> Ucum_;  // U at panel edges
};

// Closed-form y-profiles of the lambda = 0 chain (used by tuning and by the mode
// constructions): s_k, P_k and the Neumann boundary kernel rho_k, in exp-shifted form.
double mode_s(double k, double h, double y);    // sinh(k(h-y))/sinh(kh)
double mode_P(double k, double h, double y);    // solves P'' - k^2 P = -s_k, Dirichlet
double mode_dP(double k, double h, double y);   // P_k'
double rho_kernel(double k, double h, double y);  // cosh(k(h-y))/(k sinh(kh))

// limit-mode tuning residuals S_k = g(2k) + mu T(2k), k = 1..count
std::vector<double> limit_residuals(const ProfileParams& p, double mu,
                                    const std::vector<double>& d, int count);

// finite-mode residuals F(k, 0) = k^2 int P_k rho_k U_y dy - 1 on the profile grid
std::vector<double> finite_residuals(const ProfileParams& p, double mu,
                                     const std::vector<double>& d, int count);

enum class TuneMode { Limit, Finite };

struct TuneResult {
  HeatProfile profile;
  double mu = 0.0;
  std::vector<double> d;
  double resid_norm = 0.0;
  int iters = 0;
  std::vector<double> separation;  // |residual_k| for k = N+1 .. 12
};

// Tune d (and mu when mu_in <= 0) so the first N residuals vanish. Finite mode
// starts from the limit-mode solution. Throws NonConvergence if no ladder rung works.
TuneResult tune_d(ProfileParams params, TuneMode mode, double mu_in = 0.0);

}  // namespace marangoni

#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "marangoni/errors.hpp"

namespace marangoni {

using Complex = std::complex<double>;

// ---------------------------------------------------------------------------
// Gauss-Legendre rules and composite panel grids
// ---------------------------------------------------------------------------

struct GLRule {
  std::vector<double> x;  // nodes on (-1,1), increasing
  std::vector<double> w;
};

// Nodes/weights of the n-point rule, computed by Newton iteration on P_n and cached.
const GLRule& gauss_legendre(int n);

struct Panel {
  double a, b;
  int first;  // index of the panel's first node in the flat node array
};

// Piecewise Gauss-Legendre grid. Panel edges are placed on every non-smooth point of
// the integrands that ride on it, so each panel sees an analytic function.
struct CompositeGrid {
  std::vector<Panel> panels;
  std::vector<double> nodes;    // all quadrature nodes, increasing
  std::vector<double> weights;  // matching weights
  int nodes_per_panel = 16;
  double a() const { return panels.front().a; }
  double b() const { return panels.back().b; }

  double integrate(const std::function<double(double)>& f) const;
  Complex integrate_c(const std::function<Complex(double)>& f) const;
  // integral of tabulated node values against the grid weights
  double integrate_nodal(const std::vector<double>& vals) const;
  int panel_of(double y) const;  // panel containing y (clamped to [a,b])
};

// Geometric subdivision of [a,b] into n panels with first panel width ~= w0
// (falls back to uniform when uniform is already finer).
std::vector<double> geometric_edges(double a, double b, int n, double w0);

// Build a grid from explicit edges, npp nodes per panel.
CompositeGrid make_grid(const std::vector<double>& edges, int npp = 16);

// The profile grid used throughout: edges at 0, delta1 = z0-kappa, z0, z0+kappa,
// then a geometric tail to h. Panel counts 4/8/8/44 by default (64 panels).
CompositeGrid make_profile_grid(double h, double z0, double kappa, int npp = 16);

// ---------------------------------------------------------------------------
// Stable transcendental helpers
// ---------------------------------------------------------------------------

// sinh(z)/z, accurate through z = 0.
Complex shc(Complex z);
double shc(double z);

// exp-shifted ratio sinh(a)/sinh(b) for Re a >= 0, Re b > 0:
//   e^{a-b} (1 - e^{-2a}) / (1 - e^{-2b})
Complex sinh_ratio(Complex a, Complex b);
double sinh_ratio(double a, double b);

// cosh(a)/sinh(b), same shifting.
Complex cosh_sinh_ratio(Complex a, Complex b);

// principal square root with Re >= 0 (ties: Im >= 0)
Complex sqrt_re_pos(Complex z);

// ---------------------------------------------------------------------------
// Small dense / tridiagonal linear algebra
// ---------------------------------------------------------------------------

// Solve a tridiagonal system in place (Thomas algorithm, no pivoting: callers pass
// diagonally dominant operators). diag/lower/upper sized n, n-1, n-1.
template <class T>
std::vector<T> solve_tridiag(std::vector<T> lower, std::vector<T> diag, std::vector<T> upper,
                             std::vector<T> rhs) {
  const int n = static_cast<int>(diag.size());
  require(n >= 1 && (int)rhs.size() == n, ErrorCode::PreconditionError, "tridiag size");
  for (int i = 1; i < n; ++i) {
    if (diag[i - 1] == T(0)) fail(ErrorCode::BVPSingular, "tridiag zero pivot");
    T m = lower[i - 1] / diag[i - 1];
    diag[i] -= m * upper[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  if (diag[n - 1] == T(0)) fail(ErrorCode::BVPSingular, "tridiag zero pivot");
  std::vector<T> x(n);
  x[n - 1] = rhs[n - 1] / diag[n - 1];
  for (int i = n - 2; i >= 0; --i) x[i] = (rhs[i] - upper[i] * x[i + 1]) / diag[i];
  return x;
}

// ---------------------------------------------------------------------------
// Root finding and small Newton systems
// ---------------------------------------------------------------------------

// Brent's method on [a,b] with f(a) f(b) <= 0.
double brent(const std::function<double(double)>& f, double a, double b, double tol,
             int maxit = 200);

struct NewtonResult {
  std::vector<double> x;
  double resid_norm = 0.0;
  int iters = 0;
  bool converged = false;
};

// Damped Newton for small systems. Jacobian by central differences with the given
// step; step halving until the residual norm decreases (up to max_halvings).
NewtonResult damped_newton(const std::function<std::vector<double>(const std::vector<double>&)>& F,
                           std::vector<double> x0, double tol = 1e-13, int maxit = 60,
                           double fd_step = 1e-6, int max_halvings = 40);

// ---------------------------------------------------------------------------
// Polynomials
// ---------------------------------------------------------------------------

// elementary symmetric polynomials e_0..e_n of the values c (recurrence)
std::vector<double> elementary_symmetric(const std::vector<double>& c);

double poly_eval(const std::vector<double>& coeff, double y);   // sum coeff[j] y^j
double poly_deriv(const std::vector<double>& coeff, double y);  // derivative

double legendre_eval(int n, double x);  // P_n(x)

}  // namespace marangoni

#pragma once

// Direct simulation of the coupled vorticity / temperature system on the
// periodic strip: Fourier collocation in x, second-order finite differences
// in y. State variables are deviations from the stationary base profile, so
// the base state is an exact fixed point of the discrete scheme.
//
//   d(omega)/dt = nu Lap omega - {psi, omega}
//   d(w)/dt     = Lap w - psi_x Uy - gamma {psi, u1} - {psi, w} + gamma^2 eta1
//   Lap psi = -omega,  psi = 0 at both walls
//   omega(x,h) = 0,  omega(x,0) = d/dx w(x,0),  w_y = 0 at both walls
//
// omega splits as tilde_omega + omega_bar where omega_bar is the discrete
// harmonic extension of the wall trace, so tilde_omega is zero Dirichlet.
// The whole per-harmonic linear block (diffusion, the psi_x Uy coupling
// through the Poisson solve, and the trace-tendency term) advances by
// Crank-Nicolson with a prefactored LU; brackets are explicit two-step
// Adams-Bashforth with a Heun start, dealiased by the 2/3 rule.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "marangoni/control.hpp"
#include "marangoni/profile.hpp"
#include "marangoni/quadratic.hpp"
#include "marangoni/trig.hpp"

struct fftw_plan_s;

namespace marangoni {

struct Grid {
  int Nx = 64;   // x collocation points, power of two
  int Ny = 128;  // y intervals; nodes 0..Ny
  double h = 1.0;

  double dx() const { return 2.0 * M_PI / Nx; }
  double dy() const { return h / Ny; }
  int kcut() const { return Nx / 3; }  // largest evolved harmonic
  std::vector<double> ynodes() const;
  void validate() const;
};

// Per-harmonic complex amplitudes f(x,y) = sum_k fhat_k(y) exp(ikx) for
// k = 0..kcut; tilde_omega lives on interior nodes 1..Ny-1, w on all nodes.
struct SimState {
  double t = 0.0;
  std::vector<Eigen::VectorXcd> tilde_omega;
  std::vector<Eigen::VectorXcd> w;
};

// Tuned slow mode of the discrete linear block at wavenumber k: temperature
// profile w_unit with w_unit(0) = 1, the stream response psi on interior
// nodes, and the left null vector ell normalized so ell^H [0; w_unit] = 1.
struct DiscreteMode {
  int k = 0;
  Vec w_unit;
  Vec psi;
  Eigen::VectorXcd ell;
  double null_residual = 0.0;  // smallest-eigenvalue magnitude of the block
};

// Standalone field operators (layout: row j = y level, (Ny+1) x Nx).
// poisson_psi solves Lap psi = -omega with psi = 0 at both walls.
Eigen::MatrixXd poisson_psi(const Eigen::MatrixXd& omega, const Grid& grid);
// harmonic_extension evaluates the analytic series
//   sum_k ik uhat_k exp(ikx) sinh(k(h-y))/sinh(kh)
// from the wall trace, so the result is harmonic, vanishes at y = h, and its
// wall trace equals the spectral x-derivative of the input.
Eigen::MatrixXd harmonic_extension(const Eigen::VectorXd& w_bottom, const Grid& grid);

// Stationary-chain residual of the discrete per-harmonic block: the Neumann
// solve of the temperature equation forced through the Poisson response of
// the wall trace, evaluated at the wall, minus one. Zero iff the block has
// the tuned neutral mode at this k.
double discrete_residual(int k, const HeatProfile& prof, const Grid& grid);

// Newton refinement of the corrector d so discrete_residual(k) = 0 for
// k = 1..N on this grid. Start from a continuum-tuned profile; mu is held
// fixed (auto-resolved once if params.mu <= 0).
HeatProfile discrete_tune(const ProfileParams& params, const Grid& grid);

class Simulator {
 public:
  // Requires grid.h == prof.params().h; nu comes from the profile. u1 must
  // vanish below delta1 (wall trace of the base stays x-independent), eta1
  // must vanish at the wall; both may be empty.
  Simulator(const Grid& grid, const HeatProfile& prof, double gamma, const HeatSource2D& u1,
            const HeatSource2D& eta1, double dt);
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  const Grid& grid() const { return g_; }
  double dt() const { return dt_; }
  double gamma() const { return gamma_; }
  int nmodes() const { return nmodes_; }
  const std::vector<DiscreteMode>& modes() const { return modes_; }
  SimState& state() { return st_; }
  const SimState& state() const { return st_; }

  void set_base_state();
  // state = gamma sum_i (X_i^+ e_i^+ + X_i^- e_i^-) over the tuned modes
  void set_state_from_slow(const Vec& X);
  void step();
  void advance(double T);  // round(T/dt) steps

  // slow amplitudes X_i^+/- = gamma^-1 pairing with the left null vectors
  Vec project_slow() const;
  double fast_norm() const;   // L2 norm of the state minus its slow part
  double state_norm() const;  // L2 norm (x-Parseval, trapezoid in y)
  double mean_u() const;      // mean temperature deviation over the strip
  // max wall residual |omega(x,0) - d/dx w(x,0)| over collocation points
  double boundary_residual() const;
  // full discrete tendency at the current state, stacked per harmonic
  std::vector<Eigen::VectorXcd> full_tendency();

  // slow-time reduced system dX/dtau recovered from the simulator itself by
  // exact polarization of the tendency over the tuned modes (tau = gamma t)
  QuadraticSystem reduced_system();

  Eigen::MatrixXd physical_w();
  Eigen::MatrixXd physical_omega();
  Eigen::MatrixXd physical_psi();

 private:
  struct Harmonic;  // per-k operators, CN factors, scratch

  void build_operators(double dt);
  void nonlinear(const SimState& s, std::vector<Eigen::VectorXcd>& out);
  void spectral_to_grid(const std::vector<Eigen::VectorXcd>& amps, int rows, double* grid) const;
  Eigen::MatrixXd render(const std::vector<Eigen::VectorXcd>& amps, int rows) const;

  Grid g_;
  HeatProfile prof_;
  double nu_ = 1.0, gamma_ = 1.0, dt_ = 0.0;
  int nmodes_ = 0, nev_ = 0;  // tuned modes; evolved harmonics = kcut+1
  std::vector<double> uy_;    // base profile slope on the nodes
  std::vector<Harmonic> hk_;
  std::vector<DiscreteMode> modes_;
  SimState st_;
  std::vector<Eigen::VectorXcd> nl_prev_;
  bool have_prev_ = false;
  double cfl_last_ = 0.0;  // advection number of the latest bracket evaluation
  std::vector<Eigen::VectorXcd> eta_;         // gamma^2 eta1 per harmonic (w part)
  std::vector<double> u1x_, u1y_;             // base correction gradients, physical
  bool has_u1_ = false;
  std::vector<double> wq_;                    // trapezoid weights on the nodes

  // FFT machinery (row-contiguous x, Ny+1 rows)
  fftw_plan_s* plan_r2c_ = nullptr;
  fftw_plan_s* plan_c2r_ = nullptr;
  mutable std::vector<double> preal_;
  mutable std::vector<std::complex<double>> pcplx_;
};

}  // namespace marangoni

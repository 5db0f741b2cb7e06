#pragma once

#include <functional>
#include <map>
#include <vector>

#include "marangoni/bvp.hpp"
#include "marangoni/profile.hpp"

namespace marangoni {

// ---------------------------------------------------------------------------
// Characteristic residual
// ---------------------------------------------------------------------------

// Green weight rho_kbar(y) = cosh(kbar (h-y)) / (kbar sinh(kbar h)).
Complex rho_weight(double y, Complex kbar, double h);

// Stream profile of the unit chain (vorticity trace normalized so the boundary
// temperature feedback closes with w(0) = 1). Exact for all lambda; the
// small-lambda branch removes the 0/0 cancellation algebraically and reduces to
// P_k at lambda = 0. Switch at |lambda| < 1e-4 nu.
Complex psi_k(double y, double k, Complex lambda, double nu, double h);

enum class ResidualMode { Limit, Finite };

// Evaluates F(k, lambda) with a cached nodal table of U_y. Finite mode:
// k^2 int_0^h psi_k rho_kbar U_y dy - 1. Limit mode: the half-line surrogate
// (k/kbar) int_0^inf y U_y e^{-(k+kbar) y} dy - 2, closed form.
class ResidualEvaluator {
public:
  ResidualEvaluator(const HeatProfile& prof, ResidualMode mode);
  Complex operator()(int k, Complex lambda) const;
  const HeatProfile& profile() const { return *prof_; }
  ResidualMode mode() const { return mode_; }

private:
  const HeatProfile* prof_;
  ResidualMode mode_;
  std::vector<double> uy_;  // U_y at grid nodes
};

// One-shot evaluation (builds no cache).
Complex characteristic_residual(int k, Complex lambda, const HeatProfile& prof,
                                ResidualMode mode);

// Poles of the finite-mode residual with Re >= re_min:
// lambda_n = -k^2 - (n pi / h)^2, n >= 0 (all simple).
std::vector<double> residual_poles(int k, double h, double re_min);

// ---------------------------------------------------------------------------
// Root scan (argument principle over a rectangle + real-axis sweep + polish)
// ---------------------------------------------------------------------------

struct RootScanOptions {
  double tol_root = 1e-8;
  double dedup = 1e-6;
  long max_evals = 2'000'000;
  int max_retries = 5;
  unsigned seed = 20260815u;
};

struct RootScanResult {
  std::vector<Complex> roots;  // polished, deduplicated
  int zero_count = 0;          // winding + #poles inside the (possibly jittered) box
  int poles_inside = 0;
  long evals = 0;
};

// Finds all zeros of the analytic-with-known-poles function F in the closed
// rectangle [lo, hi]. `poles` lists every pole location inside or near the box
// (all simple). F must be real on the real axis.
RootScanResult find_roots(const std::function<Complex(Complex)>& F,
                          const std::vector<Complex>& poles, Complex lo, Complex hi,
                          const RootScanOptions& opt = {});

// Scan wrapper for the characteristic residual at one wavenumber.
RootScanResult find_roots(int k, const HeatProfile& prof, ResidualMode mode, Complex lo,
                          Complex hi, const RootScanOptions& opt = {});

struct RootInfo {
  Complex lambda;
  double residual = 0.0;
};

struct SpectrumReport {
  std::map<int, std::vector<RootInfo>> per_k;
  double gap = 0.0;            // min over non-tuned roots of -Re lambda (box depth if none)
  std::vector<int> zero_modes; // k whose scan found a root with |lambda| < tol_zero
};

SpectrumReport scan_spectrum(const HeatProfile& prof, int kmax, ResidualMode mode,
                             Complex lo, Complex hi, double tol_zero = 1e-6,
                             const RootScanOptions& opt = {});

// ---------------------------------------------------------------------------
// Unperturbed spectrum (U = 0): two explicit families per wavenumber
// ---------------------------------------------------------------------------

enum class SpectralFamily { Temperature, Flow };

struct SpectrumEntry {
  int k = 0;
  int m = 0;  // vertical index (m >= 0 temperature, m >= 1 flow)
  double lambda = 0.0;
  SpectralFamily family = SpectralFamily::Temperature;
};

// Eigenvalues found by bracketed root finding on the vertical dispersion factor,
// k = 0..kmax, m = 0..mmax (temperature) and 1..mmax (flow).
std::vector<SpectrumEntry> unperturbed_spectrum(double h, double nu, int kmax, int mmax);

// ---------------------------------------------------------------------------
// Modes and conjugate modes at lambda = 0
// ---------------------------------------------------------------------------

using YFun = std::function<double(double)>;

// Tuned slow mode at wavenumber k, in the sin/cos channel that the real fields use:
//   e+ = (v(y) sin kx, Theta(y) cos kx),  e- = (-v(y) cos kx, Theta(y) sin kx),
// with vorticity profile v = -k s_k, stream psi+ = -k P_k sin kx (s = -k P_k),
// temperature Theta solving Theta'' - k^2 Theta = -k^2 P_k U_y, Neumann ends.
// Normalization w(0) = A = 1; Theta(0) = 1 exactly at a tuned wavenumber.
struct Mode {
  int k = 0;
  double A = 1.0;
  YFun v, dv;
  YFun P, dP;
  YFun th, dth;
  double theta0 = 0.0;
};

// Conjugate (left) mode at k. Stationary null profile of the adjoint generator:
//   ttheta = Atilde cosh(k(h-y))/sinh(kh)
//   Phi'' - k^2 Phi = U_y ttheta, Dirichlet ends
//   zr''  - k^2 zr  = k Phi, zr'(0) = Atilde, zr(h) = 0
//   conjugate vorticity profile oz = -zr / nu  (adjoint z-equation nu z'' - nu k^2 z = -k Phi,
//   z'(0) = -Atilde/nu from the wall flux balance t'(0) = k nu z'(0))
// zr(0) ~ 0 at a tuned wavenumber (consistency value, reported).
// Real fields: et+ = (oz sin kx, ttheta cos kx), et- = (-oz cos kx, ttheta sin kx).
struct ConjMode {
  int k = 0;
  double Atilde = 1.0;
  YFun tt, dtt;
  YFun oz, doz;
  double zr0 = 0.0;
};

struct ModePair {
  Mode mode;
  ConjMode conj;
  double gram = 0.0;  // pairing before normalization
};

Mode build_mode(const HeatProfile& prof, int k);
ConjMode build_conjugate_mode(const HeatProfile& prof, int k, double Atilde = 1.0);

// Builds modes and conjugates for k = 1..N and fixes Atilde_k so that
// <e_k, et_k> = pi (<v, oz> + <Theta, ttheta>) = 1. The remaining Gram entries
// vanish exactly by x-orthogonality. Throws DegeneratePairing when the raw
// pairing is below 1e-12 in magnitude.
std::vector<ModePair> biorthogonalize(const HeatProfile& prof, int N);

}  // namespace marangoni

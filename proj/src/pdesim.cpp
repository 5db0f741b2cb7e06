#include "marangoni/pdesim.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <utility>

#include "marangoni/errors.hpp"
#include "marangoni/numerics.hpp"

namespace marangoni {
namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

const Complex J(0.0, 1.0);

// ---------------------------------------------------------------------------
// Second-order operators in y as tridiagonal bands
// ---------------------------------------------------------------------------

struct Bands {
  std::vector<double> lo, di, up;  // sizes n-1, n, n-1
};

// D^2 - k^2 on interior nodes 1..Ny-1, zero Dirichlet walls
Bands dirichlet_bands(int k, double dy, int Ny) {
  const int n = Ny - 1;
  const double c = 1.0 / (dy * dy);
  Bands b;
  b.lo.assign(n - 1, c);
  b.up.assign(n - 1, c);
  b.di.assign(n, -2.0 * c - double(k) * k);
  return b;
}

// D^2 - k^2 on all nodes 0..Ny, ghost-mirror Neumann walls
Bands neumann_bands(int k, double dy, int Ny) {
  const int n = Ny + 1;
  const double c = 1.0 / (dy * dy);
  Bands b;
  b.lo.assign(n - 1, c);
  b.up.assign(n - 1, c);
  b.di.assign(n, -2.0 * c - double(k) * k);
  b.up[0] = 2.0 * c;
  b.lo[n - 2] = 2.0 * c;
  return b;
}

template <class T>
std::vector<T> band_solve(const Bands& b, std::vector<T> rhs) {
  std::vector<T> lo(b.lo.begin(), b.lo.end());
  std::vector<T> di(b.di.begin(), b.di.end());
  std::vector<T> up(b.up.begin(), b.up.end());
  return solve_tridiag(std::move(lo), std::move(di), std::move(up), std::move(rhs));
}

VectorXcd apply_dirichlet(int k, double dy, const VectorXcd& z) {
  const int n = (int)z.size();
  const double c = 1.0 / (dy * dy), dd = -2.0 / (dy * dy) - double(k) * k;
  VectorXcd out(n);
  for (int i = 0; i < n; ++i) {
    Complex v = dd * z(i);
    if (i > 0) v += c * z(i - 1);
    if (i + 1 < n) v += c * z(i + 1);
    out(i) = v;
  }
  return out;
}

VectorXcd apply_neumann(int k, double dy, const VectorXcd& w) {
  const int n = (int)w.size();
  const double c = 1.0 / (dy * dy), dd = -2.0 / (dy * dy) - double(k) * k;
  VectorXcd out(n);
  out(0) = dd * w(0) + 2.0 * c * w(1);
  for (int i = 1; i + 1 < n; ++i) out(i) = c * w(i - 1) + dd * w(i) + c * w(i + 1);
  out(n - 1) = 2.0 * c * w(n - 2) + dd * w(n - 1);
  return out;
}

// ---------------------------------------------------------------------------
// Stationary chain of the per-harmonic block: harmonic carrier e with unit
// trace, Poisson response P = -A_D^{-1} e, temperature response of -k^2 Uy P.
// ---------------------------------------------------------------------------

struct Chain {
  std::vector<double> e_int;   // interior values of the carrier, e(0) = 1, e(h) = 0
  std::vector<double> psi_int; // P on interior nodes (psihat = ik P for unit trace)
  std::vector<double> w;       // all nodes
};

Chain stationary_chain(int k, double dy, int Ny, const std::vector<double>& uy) {
  Bands bd = dirichlet_bands(k, dy, Ny);
  std::vector<double> rhs(Ny - 1, 0.0);
  rhs[0] = -1.0 / (dy * dy);  // trace 1 entering the first interior row
  Chain ch;
  ch.e_int = band_solve(bd, rhs);
  std::vector<double> rp(Ny - 1);
  for (int j = 0; j < Ny - 1; ++j) rp[j] = -ch.e_int[j];
  ch.psi_int = band_solve(bd, rp);
  std::vector<double> rw(Ny + 1, 0.0);
  for (int j = 1; j < Ny; ++j) rw[j] = -double(k) * k * uy[j] * ch.psi_int[j - 1];
  ch.w = band_solve(neumann_bands(k, dy, Ny), rw);
  return ch;
}

std::vector<double> profile_slope(const HeatProfile& prof, const std::vector<double>& ys) {
  std::vector<double> uy(ys.size());
  for (size_t j = 0; j < ys.size(); ++j) uy[j] = prof.Uy(ys[j]);
  return uy;
}

// ---------------------------------------------------------------------------
// FFT scratch for the standalone field operators
// ---------------------------------------------------------------------------

struct FftPack {
  int Nx, rows, nk;
  std::vector<double> real;
  std::vector<Complex> cplx;
  fftw_plan r2c = nullptr, c2r = nullptr;

  FftPack(int Nx_, int rows_)
      : Nx(Nx_), rows(rows_), nk(Nx_ / 2 + 1), real(size_t(rows_) * Nx_, 0.0),
        cplx(size_t(rows_) * (Nx_ / 2 + 1), Complex(0.0, 0.0)) {
    int n = Nx;
    r2c = fftw_plan_many_dft_r2c(1, &n, rows, real.data(), nullptr, 1, Nx,
                                 reinterpret_cast<fftw_complex*>(cplx.data()), nullptr, 1, nk,
                                 FFTW_ESTIMATE);
    c2r = fftw_plan_many_dft_c2r(1, &n, rows, reinterpret_cast<fftw_complex*>(cplx.data()),
                                 nullptr, 1, nk, real.data(), nullptr, 1, Nx, FFTW_ESTIMATE);
    require(r2c != nullptr && c2r != nullptr, ErrorCode::PreconditionError, "fft plan creation");
  }
  ~FftPack() {
    if (r2c) fftw_destroy_plan(r2c);
    if (c2r) fftw_destroy_plan(c2r);
  }
  FftPack(const FftPack&) = delete;
  FftPack& operator=(const FftPack&) = delete;

  void forward() {
    fftw_execute(r2c);
    const double s = 1.0 / Nx;
    for (auto& z : cplx) z *= s;
  }
  void backward() { fftw_execute(c2r); }
};

double trapz(const std::vector<double>& wq, const VectorXd& v) {
  double s = 0.0;
  for (int j = 0; j < (int)v.size(); ++j) s += wq[j] * v(j);
  return s;
}

Complex trapz(const std::vector<double>& wq, const VectorXcd& v) {
  Complex s(0.0, 0.0);
  for (int j = 0; j < (int)v.size(); ++j) s += wq[j] * v(j);
  return s;
}

VectorXd channel_values(const BumpBasis& basis, const Vec& coeff,
                        const std::vector<double>& ys, bool deriv) {
  VectorXd out = VectorXd::Zero((int)ys.size());
  for (int j = 0; j < (int)ys.size(); ++j)
    for (int n = 0; n < (int)coeff.size(); ++n)
      out(j) += coeff(n) * (deriv ? basis.deriv(n, ys[j]) : basis.value(n, ys[j]));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid
// ---------------------------------------------------------------------------

std::vector<double> Grid::ynodes() const {
  std::vector<double> ys(Ny + 1);
  for (int j = 0; j <= Ny; ++j) ys[j] = h * double(j) / Ny;
  return ys;
}

void Grid::validate() const {
  require(Nx >= 16 && (Nx & (Nx - 1)) == 0, ErrorCode::PreconditionError,
          "Nx must be a power of two, at least 16");
  require(Ny >= 16, ErrorCode::PreconditionError, "Ny must be at least 16");
  require(h > 0.0 && std::isfinite(h), ErrorCode::PreconditionError, "strip height positive");
}

// ---------------------------------------------------------------------------
// Standalone field operators
// ---------------------------------------------------------------------------

Eigen::MatrixXd poisson_psi(const Eigen::MatrixXd& omega, const Grid& grid) {
  grid.validate();
  const int Ny = grid.Ny, Nx = grid.Nx;
  require(omega.rows() == Ny + 1 && omega.cols() == Nx, ErrorCode::PreconditionError,
          "poisson_psi: field must be (Ny+1) x Nx");
  FftPack fp(Nx, Ny + 1);
  for (int j = 0; j <= Ny; ++j)
    for (int i = 0; i < Nx; ++i) fp.real[size_t(j) * Nx + i] = omega(j, i);
  fp.forward();
  const double dy = grid.dy();
  for (int k = 0; k <= Nx / 2; ++k) {
    std::vector<Complex> rhs(Ny - 1);
    for (int j = 1; j < Ny; ++j) rhs[j - 1] = -fp.cplx[size_t(j) * fp.nk + k];
    std::vector<Complex> sol = band_solve(dirichlet_bands(k, dy, Ny), std::move(rhs));
    fp.cplx[k] = Complex(0.0, 0.0);
    for (int j = 1; j < Ny; ++j) fp.cplx[size_t(j) * fp.nk + k] = sol[j - 1];
    fp.cplx[size_t(Ny) * fp.nk + k] = Complex(0.0, 0.0);
  }
  fp.backward();
  MatrixXd psi(Ny + 1, Nx);
  for (int j = 0; j <= Ny; ++j)
    for (int i = 0; i < Nx; ++i) psi(j, i) = fp.real[size_t(j) * Nx + i];
  return psi;
}

Eigen::MatrixXd harmonic_extension(const Eigen::VectorXd& w_bottom, const Grid& grid) {
  grid.validate();
  const int Ny = grid.Ny, Nx = grid.Nx;
  require(w_bottom.size() == Nx, ErrorCode::PreconditionError,
          "harmonic_extension: trace must have Nx samples");
  FftPack tr(Nx, 1);
  for (int i = 0; i < Nx; ++i) tr.real[i] = w_bottom(i);
  tr.forward();
  FftPack fp(Nx, Ny + 1);
  std::fill(fp.cplx.begin(), fp.cplx.end(), Complex(0.0, 0.0));
  auto ys = grid.ynodes();
  // Nyquist bin dropped: the unpaired cosine has no collocated x-derivative
  for (int k = 1; k < Nx / 2; ++k) {
    Complex a = J * double(k) * tr.cplx[k];
    for (int j = 0; j <= Ny; ++j)
      fp.cplx[size_t(j) * fp.nk + k] = a * sinh_ratio(k * (grid.h - ys[j]), k * grid.h);
  }
  fp.backward();
  MatrixXd out(Ny + 1, Nx);
  for (int j = 0; j <= Ny; ++j)
    for (int i = 0; i < Nx; ++i) out(j, i) = fp.real[size_t(j) * Nx + i];
  return out;
}

// ---------------------------------------------------------------------------
// Discrete tuning
// ---------------------------------------------------------------------------

double discrete_residual(int k, const HeatProfile& prof, const Grid& grid) {
  grid.validate();
  require(k >= 1, ErrorCode::PreconditionError, "discrete_residual: k >= 1");
  require(std::abs(grid.h - prof.params().h) <= 1e-12 * std::max(1.0, grid.h),
          ErrorCode::PreconditionError, "grid height does not match the profile");
  std::vector<double> uy = profile_slope(prof, grid.ynodes());
  Chain ch = stationary_chain(k, grid.dy(), grid.Ny, uy);
  return ch.w[0] - 1.0;
}

HeatProfile discrete_tune(const ProfileParams& params, const Grid& grid) {
  grid.validate();
  require(std::abs(grid.h - params.h) <= 1e-12 * std::max(1.0, grid.h),
          ErrorCode::PreconditionError, "grid height does not match the profile");
  ProfileParams p = params;
  if (p.mu <= 0.0 || (int)p.d.size() != p.N) {
    TuneResult tr = tune_d(p, TuneMode::Finite, p.mu);
    p.mu = tr.mu;
    p.d = tr.d;
  }
  auto ys = grid.ynodes();
  const double dy = grid.dy();
  auto resid = [&](const std::vector<double>& d) {
    ProfileParams q = p;
    q.d = d;
    HeatProfile hp(q);
    std::vector<double> uy = profile_slope(hp, ys);
    std::vector<double> r(p.N);
    for (int k = 1; k <= p.N; ++k) r[k - 1] = stationary_chain(k, dy, grid.Ny, uy).w[0] - 1.0;
    return r;
  };
  NewtonResult nr = damped_newton(resid, p.d, 1e-13, 60, 1e-7);
  require(nr.converged, ErrorCode::NonConvergence, "discrete_tune: Newton did not converge");
  for (double dj : nr.x)
    require(std::abs(dj) < 0.5, ErrorCode::NonConvergence,
            "discrete_tune: corrector left the admissible box");
  p.d = nr.x;
  return HeatProfile(p);
}

// ---------------------------------------------------------------------------
// Simulator
// ---------------------------------------------------------------------------

struct Simulator::Harmonic {
  int k = 0;
  Bands bd;                           // interior Dirichlet bands at this k
  VectorXd e_int;                     // harmonic carrier, interior values
  MatrixXcd M;                        // full linear block on [tilde_omega; w]
  MatrixXcd Plus;                     // I + dt/2 M
  Eigen::PartialPivLU<MatrixXcd> lu;  // I - dt/2 M
};

namespace {

// Linear tendency of one harmonic: diffusion, the psi_x Uy coupling through
// the Poisson solve of the carried vorticity, and the trace-tendency pullback.
void linear_rhs(double nu, const std::vector<double>& uy, const Bands& bd, const VectorXd& e_int,
                int k, double dy, int Ny, const VectorXcd& zom, const VectorXcd& zw,
                VectorXcd& dom, VectorXcd& dw) {
  const Complex tau = J * double(k) * zw(0);
  std::vector<Complex> rhs(Ny - 1);
  for (int j = 0; j < Ny - 1; ++j) rhs[j] = -(zom(j) + tau * e_int(j));
  std::vector<Complex> psi = band_solve(bd, std::move(rhs));
  dw = apply_neumann(k, dy, zw);
  for (int j = 1; j < Ny; ++j) dw(j) -= J * double(k) * uy[j] * psi[j - 1];
  // carrier rows are discrete-harmonic, so diffusion sees only tilde_omega
  dom = nu * apply_dirichlet(k, dy, zom);
  dom -= (J * double(k) * dw(0)) * e_int.cast<Complex>();
}

}  // namespace

Simulator::Simulator(const Grid& grid, const HeatProfile& prof, double gamma,
                     const HeatSource2D& u1, const HeatSource2D& eta1, double dt)
    : g_(grid), prof_(prof) {
  g_.validate();
  const ProfileParams& pp = prof_.params();
  require(std::abs(g_.h - pp.h) <= 1e-12 * std::max(1.0, pp.h), ErrorCode::PreconditionError,
          "grid height does not match the profile");
  require(dt > 0.0 && std::isfinite(dt), ErrorCode::PreconditionError, "dt positive");
  require(gamma > 0.0, ErrorCode::PreconditionError, "gamma positive");
  require(pp.nu > 0.0, ErrorCode::PreconditionError, "profile nu positive");
  nu_ = pp.nu;
  gamma_ = gamma;
  dt_ = dt;
  nmodes_ = pp.N;
  nev_ = g_.kcut() + 1;
  require(nmodes_ <= g_.kcut(), ErrorCode::PreconditionError,
          "tuned modes exceed the dealias cutoff");

  const int Ny = g_.Ny, Nx = g_.Nx;
  auto ys = g_.ynodes();
  uy_ = profile_slope(prof_, ys);
  wq_.assign(Ny + 1, g_.dy());
  wq_[0] = wq_[Ny] = 0.5 * g_.dy();

  has_u1_ = !u1.empty();
  if (has_u1_) {
    require(u1.basis.lo >= prof_.delta1() - 1e-9, ErrorCode::SupportViolation,
            "base correction must vanish below delta1");
    require(u1.basis.hi <= g_.h + 1e-12, ErrorCode::SupportViolation,
            "base correction support exceeds the strip");
    int mmax = 0;
    for (const auto& kv : u1.cosc) mmax = std::max(mmax, kv.first);
    for (const auto& kv : u1.sinc) mmax = std::max(mmax, kv.first);
    require(mmax + g_.kcut() <= Nx / 2, ErrorCode::PreconditionError,
            "base correction harmonics would alias against the evolved band");
    u1x_.assign(size_t(Ny + 1) * Nx, 0.0);
    u1y_.assign(size_t(Ny + 1) * Nx, 0.0);
    const double dx = g_.dx();
    auto add_channel = [&](int m, const Vec& coeff, bool sine) {
      VectorXd vals = channel_values(u1.basis, coeff, ys, false);
      VectorXd dval = channel_values(u1.basis, coeff, ys, true);
      for (int i = 0; i < Nx; ++i) {
        const double cm = std::cos(m * i * dx), sm = std::sin(m * i * dx);
        const double fx = sine ? m * cm : -m * sm;  // d/dx of the x-factor
        const double fy = sine ? sm : cm;
        for (int j = 0; j <= Ny; ++j) {
          u1x_[size_t(j) * Nx + i] += fx * vals(j);
          u1y_[size_t(j) * Nx + i] += fy * dval(j);
        }
      }
    };
    for (const auto& kv : u1.cosc) add_channel(kv.first, kv.second, false);
    for (const auto& kv : u1.sinc) {
      require(kv.first >= 1, ErrorCode::PreconditionError, "sine channel needs m >= 1");
      add_channel(kv.first, kv.second, true);
    }
  }

  eta_.assign(nev_, VectorXcd::Zero(Ny + 1));
  if (!eta1.empty()) {
    require(eta1.basis.lo >= 1e-12, ErrorCode::SupportViolation,
            "forcing must vanish at the wall");
    require(eta1.basis.hi <= g_.h + 1e-12, ErrorCode::SupportViolation,
            "forcing support exceeds the strip");
    const double g2 = gamma_ * gamma_;
    for (const auto& kv : eta1.cosc) {
      const int m = kv.first;
      require(m >= 0 && m <= g_.kcut(), ErrorCode::PreconditionError,
              "forcing harmonic beyond the dealias cutoff");
      VectorXd vals = channel_values(eta1.basis, kv.second, ys, false);
      if (m == 0) {
        const double tz = trapz(wq_, vals);
        require(std::abs(tz) <= 1e-10 * (1.0 + vals.cwiseAbs().maxCoeff()),
                ErrorCode::MeanViolation, "x-independent forcing must have zero mean");
        eta_[0] += g2 * vals.cast<Complex>();
      } else {
        eta_[m] += (0.5 * g2) * vals.cast<Complex>();
      }
    }
    for (const auto& kv : eta1.sinc) {
      const int m = kv.first;
      require(m >= 1 && m <= g_.kcut(), ErrorCode::PreconditionError,
              "forcing harmonic beyond the dealias cutoff");
      VectorXd vals = channel_values(eta1.basis, kv.second, ys, false);
      eta_[m] += Complex(0.0, -0.5 * g2) * vals.cast<Complex>();
    }
  }

  build_operators(dt_);

  // tuned slow modes and their left null vectors
  for (int k = 1; k <= nmodes_; ++k) {
    Chain ch = stationary_chain(k, g_.dy(), Ny, uy_);
    DiscreteMode dm;
    dm.k = k;
    const double b0 = ch.w[0];
    require(std::abs(b0) > 0.5, ErrorCode::PreconditionError,
            "degenerate temperature trace in the tuned chain");
    dm.w_unit = VectorXd::Zero(Ny + 1);
    for (int j = 0; j <= Ny; ++j) dm.w_unit(j) = ch.w[j] / b0;
    dm.psi = VectorXd::Zero(Ny - 1);
    for (int j = 0; j < Ny - 1; ++j) dm.psi(j) = ch.psi_int[j];

    const int nz = 2 * Ny;
    VectorXcd m = VectorXcd::Zero(nz);
    m.tail(Ny + 1) = dm.w_unit.cast<Complex>();
    Eigen::PartialPivLU<MatrixXcd> luH(hk_[k].M.adjoint());
    VectorXcd v(nz);
    for (int j = 0; j < nz; ++j) v(j) = Complex(1.0 + 0.01 * double(j) / nz, 0.0);
    v.normalize();
    for (int it = 0; it < 5; ++it) {
      v = luH.solve(v);
      v.normalize();
    }
    dm.null_residual = (hk_[k].M.adjoint() * v).norm();
    const Complex c = v.dot(m);
    require(std::abs(c) > 1e-8, ErrorCode::DegeneratePairing,
            "left null vector nearly orthogonal to the tuned mode");
    dm.ell = std::conj(1.0 / c) * v;
    modes_.push_back(std::move(dm));
  }

  st_.t = 0.0;
  st_.tilde_omega.assign(nev_, VectorXcd::Zero(Ny - 1));
  st_.w.assign(nev_, VectorXcd::Zero(Ny + 1));
  nl_prev_.assign(nev_, VectorXcd::Zero(2 * Ny));

  preal_.assign(size_t(Ny + 1) * Nx, 0.0);
  pcplx_.assign(size_t(Ny + 1) * (Nx / 2 + 1), Complex(0.0, 0.0));
  int n = Nx;
  plan_r2c_ = fftw_plan_many_dft_r2c(1, &n, Ny + 1, preal_.data(), nullptr, 1, Nx,
                                     reinterpret_cast<fftw_complex*>(pcplx_.data()), nullptr, 1,
                                     Nx / 2 + 1, FFTW_ESTIMATE);
  plan_c2r_ = fftw_plan_many_dft_c2r(1, &n, Ny + 1,
                                     reinterpret_cast<fftw_complex*>(pcplx_.data()), nullptr, 1,
                                     Nx / 2 + 1, preal_.data(), nullptr, 1, Nx, FFTW_ESTIMATE);
  require(plan_r2c_ != nullptr && plan_c2r_ != nullptr, ErrorCode::PreconditionError,
          "fft plan creation");
}

Simulator::~Simulator() {
  if (plan_r2c_) fftw_destroy_plan(plan_r2c_);
  if (plan_c2r_) fftw_destroy_plan(plan_c2r_);
}

void Simulator::build_operators(double dt) {
  const int Ny = g_.Ny;
  const double dy = g_.dy();
  const int nz = 2 * Ny;
  hk_.resize(nev_);
  for (int k = 0; k < nev_; ++k) {
    Harmonic& H = hk_[k];
    H.k = k;
    H.bd = dirichlet_bands(k, dy, Ny);
    if (k == 0) {
      H.e_int = VectorXd::Zero(Ny - 1);
    } else {
      std::vector<double> rhs(Ny - 1, 0.0);
      rhs[0] = -1.0 / (dy * dy);
      std::vector<double> e = band_solve(H.bd, std::move(rhs));
      H.e_int = VectorXd::Zero(Ny - 1);
      for (int j = 0; j < Ny - 1; ++j) H.e_int(j) = e[j];
    }
    H.M.resize(nz, nz);
    VectorXcd zom = VectorXcd::Zero(Ny - 1), zw = VectorXcd::Zero(Ny + 1), dom, dw;
    for (int c = 0; c < nz; ++c) {
      zom.setZero();
      zw.setZero();
      if (c < Ny - 1)
        zom(c) = 1.0;
      else
        zw(c - (Ny - 1)) = 1.0;
      linear_rhs(nu_, uy_, H.bd, H.e_int, k, dy, Ny, zom, zw, dom, dw);
      H.M.col(c).head(Ny - 1) = dom;
      H.M.col(c).tail(Ny + 1) = dw;
    }
    MatrixXcd id = MatrixXcd::Identity(nz, nz);
    H.Plus = id + (0.5 * dt) * H.M;
    H.lu.compute(id - (0.5 * dt) * H.M);
  }
}

namespace {

VectorXcd pack_state(const SimState& s, int k, int Ny) {
  VectorXcd z(2 * Ny);
  z.head(Ny - 1) = s.tilde_omega[k];
  z.tail(Ny + 1) = s.w[k];
  return z;
}

void unpack_state(const VectorXcd& z, SimState& s, int k, int Ny) {
  s.tilde_omega[k] = z.head(Ny - 1);
  s.w[k] = z.tail(Ny + 1);
}

}  // namespace

void Simulator::nonlinear(const SimState& s, std::vector<Eigen::VectorXcd>& out) {
  const int Ny = g_.Ny, Nx = g_.Nx, nk = Nx / 2 + 1;
  const double dy = g_.dy();

  // compose full-node spectra of psi, omega, w and their x-derivatives
  std::vector<VectorXcd> psiA(nev_), omA(nev_), wA(nev_), dxA(nev_);
  for (int k = 0; k < nev_; ++k) {
    const Complex tau = J * double(k) * s.w[k](0);
    VectorXcd om(Ny + 1);
    om(0) = tau;
    om.segment(1, Ny - 1) = s.tilde_omega[k] + tau * hk_[k].e_int.cast<Complex>();
    om(Ny) = Complex(0.0, 0.0);
    std::vector<Complex> rhs(Ny - 1);
    for (int j = 0; j < Ny - 1; ++j) rhs[j] = -om(j + 1);
    std::vector<Complex> psi = band_solve(hk_[k].bd, std::move(rhs));
    VectorXcd ps = VectorXcd::Zero(Ny + 1);
    for (int j = 0; j < Ny - 1; ++j) ps(j + 1) = psi[j];
    psiA[k] = ps;
    omA[k] = om;
    wA[k] = s.w[k];
  }

  const size_t np = size_t(Ny + 1) * Nx;
  std::vector<double> PSI(np), OM(np), W(np), PSIX(np), OMX(np), WX(np);
  spectral_to_grid(psiA, Ny + 1, PSI.data());
  spectral_to_grid(omA, Ny + 1, OM.data());
  spectral_to_grid(wA, Ny + 1, W.data());
  for (int k = 0; k < nev_; ++k) dxA[k] = (J * double(k)) * psiA[k];
  spectral_to_grid(dxA, Ny + 1, PSIX.data());
  for (int k = 0; k < nev_; ++k) dxA[k] = (J * double(k)) * omA[k];
  spectral_to_grid(dxA, Ny + 1, OMX.data());
  for (int k = 0; k < nev_; ++k) dxA[k] = (J * double(k)) * wA[k];
  spectral_to_grid(dxA, Ny + 1, WX.data());

  // y-derivatives: centered inside, one-sided second order at the walls
  // (w is Neumann, so its wall derivative is exactly zero)
  std::vector<double> PSIY(np), OMY(np), WY(np);
  const double i2dy = 0.5 / dy;
  for (int i = 0; i < Nx; ++i) {
    for (int j = 1; j < Ny; ++j) {
      const size_t p = size_t(j) * Nx + i;
      PSIY[p] = (PSI[p + Nx] - PSI[p - Nx]) * i2dy;
      OMY[p] = (OM[p + Nx] - OM[p - Nx]) * i2dy;
      WY[p] = (W[p + Nx] - W[p - Nx]) * i2dy;
    }
    PSIY[i] = (-3.0 * PSI[i] + 4.0 * PSI[Nx + i] - PSI[2 * Nx + i]) * i2dy;
    OMY[i] = (-3.0 * OM[i] + 4.0 * OM[Nx + i] - OM[2 * Nx + i]) * i2dy;
    WY[i] = 0.0;
    const size_t q = size_t(Ny) * Nx + i;
    PSIY[q] = (3.0 * PSI[q] - 4.0 * PSI[q - Nx] + PSI[q - 2 * Nx]) * i2dy;
    OMY[q] = (3.0 * OM[q] - 4.0 * OM[q - Nx] + OM[q - 2 * Nx]) * i2dy;
    WY[q] = 0.0;
  }

  double vx = 0.0, vy = 0.0;
  for (size_t p = 0; p < np; ++p) {
    vx = std::max(vx, std::abs(PSIY[p]));
    vy = std::max(vy, std::abs(PSIX[p]));
  }
  cfl_last_ = vx / g_.dx() + vy / dy;

  std::vector<double> NLW(np), NLOM(np);
  for (size_t p = 0; p < np; ++p) {
    double wx = WX[p], wy = WY[p];
    if (has_u1_) {
      wx += gamma_ * u1x_[p];
      wy += gamma_ * u1y_[p];
    }
    NLW[p] = -(PSIY[p] * wx - PSIX[p] * wy);
    NLOM[p] = -(PSIY[p] * OMX[p] - PSIX[p] * OMY[p]);
  }

  // forward transforms, truncated to the evolved band
  auto collect = [&](const std::vector<double>& gridv, std::vector<VectorXcd>& hats) {
    std::copy(gridv.begin(), gridv.end(), preal_.begin());
    fftw_execute(plan_r2c_);
    const double sc = 1.0 / Nx;
    hats.assign(nev_, VectorXcd(Ny + 1));
    for (int k = 0; k < nev_; ++k)
      for (int j = 0; j <= Ny; ++j) hats[k](j) = sc * pcplx_[size_t(j) * nk + k];
  };
  std::vector<VectorXcd> hw, hom;
  collect(NLW, hw);
  collect(NLOM, hom);

  out.resize(nev_);
  for (int k = 0; k < nev_; ++k) {
    VectorXcd nw = hw[k] + eta_[k];
    if (k == 0) {
      // the continuum mean tendency is exactly zero; remove the trapezoid
      // defect of the bracket so the discrete mean is conserved to rounding
      nw.array() -= trapz(wq_, nw) / g_.h;
    }
    VectorXcd nom = hom[k].segment(1, Ny - 1);
    if (k > 0) nom -= (J * double(k) * nw(0)) * hk_[k].e_int.cast<Complex>();
    out[k].resize(2 * Ny);
    out[k].head(Ny - 1) = nom;
    out[k].tail(Ny + 1) = nw;
  }
}

void Simulator::step() {
  const int Ny = g_.Ny;
  std::vector<VectorXcd> nl_now;
  nonlinear(st_, nl_now);
  if (cfl_last_ * dt_ > 0.9)
    fail(ErrorCode::CFLViolation, "advective limit exceeded: dt * (|u|/dx + |v|/dy) = " +
                                      std::to_string(cfl_last_ * dt_));

  double chk = 0.0;
  if (!have_prev_) {
    // Heun start: explicit Euler predictor, trapezoid corrector on the bracket
    SimState pred = st_;
    for (int k = 0; k < nev_; ++k) {
      VectorXcd z = pack_state(st_, k, Ny);
      VectorXcd zs = hk_[k].lu.solve(hk_[k].Plus * z + dt_ * nl_now[k]);
      unpack_state(zs, pred, k, Ny);
    }
    pred.t = st_.t + dt_;
    std::vector<VectorXcd> nl_star;
    nonlinear(pred, nl_star);
    for (int k = 0; k < nev_; ++k) {
      VectorXcd z = pack_state(st_, k, Ny);
      VectorXcd zn =
          hk_[k].lu.solve(hk_[k].Plus * z + (0.5 * dt_) * (nl_now[k] + nl_star[k]));
      chk += zn.squaredNorm();
      unpack_state(zn, st_, k, Ny);
    }
  } else {
    for (int k = 0; k < nev_; ++k) {
      VectorXcd z = pack_state(st_, k, Ny);
      VectorXcd zn = hk_[k].lu.solve(hk_[k].Plus * z +
                                     dt_ * (1.5 * nl_now[k] - 0.5 * nl_prev_[k]));
      chk += zn.squaredNorm();
      unpack_state(zn, st_, k, Ny);
    }
  }
  if (!std::isfinite(chk))
    fail(ErrorCode::NaNDetected, "non-finite state after step at t = " + std::to_string(st_.t));
  nl_prev_ = std::move(nl_now);
  have_prev_ = true;
  st_.t += dt_;
}

void Simulator::advance(double T) {
  require(T >= 0.0 && std::isfinite(T), ErrorCode::PreconditionError, "advance: T >= 0");
  const long n = std::lround(T / dt_);
  for (long i = 0; i < n; ++i) step();
}

void Simulator::set_base_state() {
  for (int k = 0; k < nev_; ++k) {
    st_.tilde_omega[k].setZero();
    st_.w[k].setZero();
  }
  have_prev_ = false;
}

void Simulator::set_state_from_slow(const Vec& X) {
  require((int)X.size() == 2 * nmodes_, ErrorCode::PreconditionError,
          "slow vector must have 2N entries");
  set_base_state();
  for (int i = 0; i < nmodes_; ++i) {
    const Complex c = 0.5 * gamma_ * Complex(X(i), -X(nmodes_ + i));
    st_.w[modes_[i].k] = c * modes_[i].w_unit.cast<Complex>();
  }
}

Vec Simulator::project_slow() const {
  const int Ny = g_.Ny;
  Vec X = Vec::Zero(2 * nmodes_);
  for (int i = 0; i < nmodes_; ++i) {
    VectorXcd z = pack_state(st_, modes_[i].k, Ny);
    const Complex a = modes_[i].ell.dot(z);
    X(i) = 2.0 * a.real() / gamma_;
    X(nmodes_ + i) = -2.0 * a.imag() / gamma_;
  }
  return X;
}

double Simulator::state_norm() const {
  const int Ny = g_.Ny;
  double acc = 0.0;
  for (int k = 0; k < nev_; ++k) {
    const double ck = (k == 0) ? 1.0 : 2.0;
    double s = 0.0;
    for (int j = 1; j < Ny; ++j) s += wq_[j] * std::norm(st_.tilde_omega[k](j - 1));
    for (int j = 0; j <= Ny; ++j) s += wq_[j] * std::norm(st_.w[k](j));
    acc += ck * s;
  }
  return std::sqrt(2.0 * M_PI * acc);
}

double Simulator::fast_norm() const {
  const int Ny = g_.Ny;
  std::vector<VectorXcd> om = st_.tilde_omega, w = st_.w;
  for (int i = 0; i < nmodes_; ++i) {
    const int k = modes_[i].k;
    VectorXcd z(2 * Ny);
    z.head(Ny - 1) = om[k];
    z.tail(Ny + 1) = w[k];
    const Complex a = modes_[i].ell.dot(z);
    w[k] -= a * modes_[i].w_unit.cast<Complex>();
  }
  double acc = 0.0;
  for (int k = 0; k < nev_; ++k) {
    const double ck = (k == 0) ? 1.0 : 2.0;
    double s = 0.0;
    for (int j = 1; j < Ny; ++j) s += wq_[j] * std::norm(om[k](j - 1));
    for (int j = 0; j <= Ny; ++j) s += wq_[j] * std::norm(w[k](j));
    acc += ck * s;
  }
  return std::sqrt(2.0 * M_PI * acc);
}

double Simulator::mean_u() const { return (trapz(wq_, st_.w[0]) / g_.h).real(); }

double Simulator::boundary_residual() const {
  const int Ny = g_.Ny, Nx = g_.Nx;
  std::vector<VectorXcd> omA(nev_), wxA(nev_);
  for (int k = 0; k < nev_; ++k) {
    const Complex tau = J * double(k) * st_.w[k](0);
    VectorXcd om(Ny + 1);
    om(0) = tau;
    om.segment(1, Ny - 1) = st_.tilde_omega[k] + tau * hk_[k].e_int.cast<Complex>();
    om(Ny) = Complex(0.0, 0.0);
    omA[k] = om;
    wxA[k] = (J * double(k)) * st_.w[k];
  }
  MatrixXd OM = render(omA, Ny + 1);
  MatrixXd WX = render(wxA, Ny + 1);
  double r = 0.0;
  for (int i = 0; i < Nx; ++i) r = std::max(r, std::abs(OM(0, i) - WX(0, i)));
  return r;
}

std::vector<Eigen::VectorXcd> Simulator::full_tendency() {
  const int Ny = g_.Ny;
  std::vector<VectorXcd> nl;
  nonlinear(st_, nl);
  std::vector<VectorXcd> out(nev_);
  for (int k = 0; k < nev_; ++k) out[k] = hk_[k].M * pack_state(st_, k, Ny) + nl[k];
  return out;
}

QuadraticSystem Simulator::reduced_system() {
  const int n = 2 * nmodes_;
  SimState saved = st_;
  std::vector<VectorXcd> nlp = nl_prev_;
  const bool hp = have_prev_;

  auto F = [&](const Vec& X) {
    set_state_from_slow(X);
    std::vector<VectorXcd> td = full_tendency();
    Vec out(n);
    const double g2 = gamma_ * gamma_;
    for (int i = 0; i < nmodes_; ++i) {
      const Complex a = modes_[i].ell.dot(td[modes_[i].k]);
      out(i) = 2.0 * a.real() / g2;
      out(nmodes_ + i) = -2.0 * a.imag() / g2;
    }
    return out;
  };

  // the tendency is an exact quadratic polynomial of the slow vector, so
  // polarization over +/- unit vectors and pair sums recovers it exactly
  const Vec f0 = F(Vec::Zero(n));
  Mat M(n, n);
  Tensor3R G(n, n, n);
  std::vector<Vec> qd(n);
  for (int j = 0; j < n; ++j) {
    Vec ej = Vec::Zero(n);
    ej(j) = 1.0;
    const Vec fp = F(ej), fm = F(-ej);
    M.col(j) = 0.5 * (fp - fm);
    qd[j] = 0.5 * (fp + fm) - f0;
    for (int i = 0; i < n; ++i) G.at(i, j, j) = qd[j](i);
  }
  for (int j = 0; j < n; ++j)
    for (int l = j + 1; l < n; ++l) {
      Vec ejl = Vec::Zero(n);
      ejl(j) = 1.0;
      ejl(l) = 1.0;
      const Vec q = F(ejl) - M.col(j) - M.col(l) - f0;
      for (int i = 0; i < n; ++i) {
        const double cr = 0.5 * (q(i) - qd[j](i) - qd[l](i));
        G.at(i, j, l) = cr;
        G.at(i, l, j) = cr;
      }
    }

  st_ = saved;
  nl_prev_ = std::move(nlp);
  have_prev_ = hp;

  QuadraticSystem sys;
  sys.N = n;
  sys.K = std::move(G);
  sys.M = std::move(M);
  sys.g = f0;
  return sys;
}

void Simulator::spectral_to_grid(const std::vector<Eigen::VectorXcd>& amps, int rows,
                                 double* grid) const {
  const int Nx = g_.Nx, nk = Nx / 2 + 1, Ny = g_.Ny;
  require(rows == Ny + 1, ErrorCode::PreconditionError, "render expects all y levels");
  require((int)amps.size() <= nk, ErrorCode::PreconditionError, "render band too wide");
  std::fill(pcplx_.begin(), pcplx_.end(), Complex(0.0, 0.0));
  for (int k = 0; k < (int)amps.size(); ++k)
    for (int j = 0; j < rows; ++j) pcplx_[size_t(j) * nk + k] = amps[k](j);
  fftw_execute(plan_c2r_);
  std::copy(preal_.begin(), preal_.end(), grid);
}

Eigen::MatrixXd Simulator::render(const std::vector<Eigen::VectorXcd>& amps, int rows) const {
  const int Nx = g_.Nx;
  std::vector<double> buf(size_t(rows) * Nx);
  spectral_to_grid(amps, rows, buf.data());
  MatrixXd out(rows, Nx);
  for (int j = 0; j < rows; ++j)
    for (int i = 0; i < Nx; ++i) out(j, i) = buf[size_t(j) * Nx + i];
  return out;
}

Eigen::MatrixXd Simulator::physical_w() {
  std::vector<VectorXcd> a(st_.w.begin(), st_.w.end());
  return render(a, g_.Ny + 1);
}

Eigen::MatrixXd Simulator::physical_omega() {
  const int Ny = g_.Ny;
  std::vector<VectorXcd> a(nev_);
  for (int k = 0; k < nev_; ++k) {
    const Complex tau = J * double(k) * st_.w[k](0);
    VectorXcd om(Ny + 1);
    om(0) = tau;
    om.segment(1, Ny - 1) = st_.tilde_omega[k] + tau * hk_[k].e_int.cast<Complex>();
    om(Ny) = Complex(0.0, 0.0);
    a[k] = om;
  }
  return render(a, Ny + 1);
}

Eigen::MatrixXd Simulator::physical_psi() {
  const int Ny = g_.Ny;
  std::vector<VectorXcd> a(nev_);
  for (int k = 0; k < nev_; ++k) {
    const Complex tau = J * double(k) * st_.w[k](0);
    std::vector<Complex> rhs(Ny - 1);
    for (int j = 0; j < Ny - 1; ++j)
      rhs[j] = -(st_.tilde_omega[k](j) + tau * hk_[k].e_int(j));
    std::vector<Complex> psi = band_solve(hk_[k].bd, std::move(rhs));
    VectorXcd ps = VectorXcd::Zero(Ny + 1);
    for (int j = 0; j < Ny - 1; ++j) ps(j + 1) = psi[j];
    a[k] = ps;
  }
  return render(a, Ny + 1);
}

}  // namespace marangoni

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <vector>

#include "doctest.h"
#include "marangoni/control.hpp"
#include "marangoni/galerkin.hpp"
#include "marangoni/pdesim.hpp"
#include "marangoni/profile.hpp"
#include "marangoni/spectral.hpp"

using namespace marangoni;

namespace {

// deep-layer configuration: the tail keeps U_y visible at realistic nu
ProfileParams sim_params() {
  ProfileParams p;
  p.N = 2;
  p.kappa = 0.25;
  p.z0 = 1.25;
  p.nu = 1e3;
  p.h = std::log(1e3);
  return p;
}

Grid sim_grid() { return Grid{64, 128, std::log(1e3)}; }

const HeatProfile& disc_tuned() {
  static HeatProfile p = discrete_tune(sim_params(), sim_grid());
  return p;
}

const HeatProfile& cont_tuned() {
  static TuneResult t = tune_d(sim_params(), TuneMode::Finite);
  return t.profile;
}

const std::vector<ModePair>& cont_pairs() {
  static std::vector<ModePair> p = biorthogonalize(cont_tuned(), 2);
  return p;
}

Vec slow4() {
  Vec X(4);
  X << 0.4, -0.3, 0.2, 0.25;
  return X;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a marangoni::Error");
  return ErrorCode::PreconditionError;
}

double tensor_max(const Tensor3R& t) {
  double m = 0.0;
  for (double v : t.a) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

TEST_SUITE("pdesim") {

TEST_CASE("grid validation rejects bad shapes") {
  CHECK(code_of([] { Grid{48, 128, 2.0}.validate(); }) == ErrorCode::PreconditionError);
  CHECK(code_of([] { Grid{64, 8, 2.0}.validate(); }) == ErrorCode::PreconditionError);
  CHECK(code_of([] { Grid{64, 128, -1.0}.validate(); }) == ErrorCode::PreconditionError);
  Grid g{64, 128, 2.0};
  g.validate();
  CHECK(g.kcut() == 21);
  CHECK(g.ynodes().size() == 129);
}

TEST_CASE("poisson solve inverts the discrete eigenmode") {
  Grid g{32, 64, 2.0};
  const int m = 3, k = 2;
  const double dy = g.dy();
  auto ys = g.ynodes();
  Eigen::MatrixXd om(g.Ny + 1, g.Nx);
  for (int j = 0; j <= g.Ny; ++j)
    for (int i = 0; i < g.Nx; ++i)
      om(j, i) = std::sin(m * M_PI * ys[j] / g.h) * std::cos(k * i * g.dx());
  const double lam = k * k + 2.0 / (dy * dy) * (1.0 - std::cos(m * M_PI * dy / g.h));
  Eigen::MatrixXd psi = poisson_psi(om, g);
  CHECK((psi - om / lam).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(psi.row(0).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(psi.row(g.Ny).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("harmonic extension reproduces the closed form") {
  Grid g{32, 64, 2.0};
  auto ys = g.ynodes();
  Eigen::VectorXd trace(g.Nx);
  for (int i = 0; i < g.Nx; ++i)
    trace(i) = std::cos(3 * i * g.dx()) + 0.5 * std::sin(i * g.dx());
  Eigen::MatrixXd ext = harmonic_extension(trace, g);
  for (int j = 0; j <= g.Ny; ++j) {
    double s3 = sinh_ratio(3.0 * (g.h - ys[j]), 3.0 * g.h);
    double s1 = sinh_ratio(g.h - ys[j], g.h);
    for (int i = 0; i < g.Nx; ++i) {
      double x = i * g.dx();
      double want = -3.0 * std::sin(3 * x) * s3 + 0.5 * std::cos(x) * s1;
      CHECK(ext(j, i) == doctest::Approx(want).epsilon(1e-12));
    }
  }
  CHECK(ext.row(g.Ny).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("discrete tuning closes the stationary chain on the grid") {
  Grid g = sim_grid();
  const HeatProfile& p = disc_tuned();
  CHECK(std::abs(discrete_residual(1, p, g)) < 1e-12);
  CHECK(std::abs(discrete_residual(2, p, g)) < 1e-12);
  for (double dj : p.params().d) CHECK(std::abs(dj) < 0.5);

  // the continuum-tuned corrector alone leaves a visible grid defect
  CHECK(std::abs(discrete_residual(1, cont_tuned(), g)) > 1e-8);

  CHECK(code_of([&] { discrete_residual(0, p, g); }) == ErrorCode::PreconditionError);
}

TEST_CASE("base state is a fixed point of the scheme") {
  Simulator sim(sim_grid(), disc_tuned(), 1e-3, HeatSource2D{}, HeatSource2D{}, 0.02);
  sim.set_base_state();
  sim.advance(0.5);
  CHECK(sim.state_norm() < 1e-12);
  CHECK(sim.mean_u() == doctest::Approx(0.0));
  CHECK(sim.state().t == doctest::Approx(0.5));
}

TEST_CASE("zero-harmonic diffusion follows the one-step multiplier exactly") {
  Grid g = sim_grid();
  Simulator sim(g, disc_tuned(), 1e-3, HeatSource2D{}, HeatSource2D{}, 0.02);
  const int m = 2, n = 10;
  auto ys = g.ynodes();
  sim.set_base_state();
  for (int j = 0; j <= g.Ny; ++j)
    sim.state().w[0](j) = std::cos(m * M_PI * ys[j] / g.h);

  const double dy = g.dy();
  const double lam = -2.0 / (dy * dy) * (1.0 - std::cos(m * M_PI * dy / g.h));
  const double r = (1.0 + 0.5 * sim.dt() * lam) / (1.0 - 0.5 * sim.dt() * lam);
  sim.advance(n * sim.dt());

  double amp = std::pow(r, n);
  for (int j = 0; j <= g.Ny; ++j) {
    CHECK(sim.state().w[0](j).real() ==
          doctest::Approx(amp * std::cos(m * M_PI * ys[j] / g.h)).epsilon(1e-12));
    CHECK(std::abs(sim.state().w[0](j).imag()) < 1e-14);
  }
}

TEST_CASE("slow embedding: projection roundtrip and conserved invariants") {
  Simulator sim(sim_grid(), disc_tuned(), 1e-2, HeatSource2D{}, HeatSource2D{}, 0.02);
  REQUIRE(sim.nmodes() == 2);
  for (const DiscreteMode& dm : sim.modes()) {
    CHECK(dm.w_unit(0) == 1.0);
    CHECK(dm.null_residual < 1e-9);
  }

  Vec X0 = slow4();
  sim.set_state_from_slow(X0);
  CHECK((sim.project_slow() - X0).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(sim.fast_norm() < 1e-12);
  CHECK(sim.boundary_residual() < 1e-12);
  CHECK(sim.mean_u() == doctest::Approx(0.0));

  sim.advance(1.0);
  CHECK(std::abs(sim.mean_u()) < 1e-12);     // bracket defect removed each step
  CHECK(sim.boundary_residual() < 1e-12);    // wall trace carried spectrally
  CHECK(sim.state_norm() < 1.0);             // nothing blew up at this amplitude

  Vec wrong(3);
  wrong.setZero();
  CHECK(code_of([&] { sim.set_state_from_slow(wrong); }) == ErrorCode::PreconditionError);
}

TEST_CASE("step halving converges at second order") {
  const double T = 0.2;
  auto run = [&](double dt) {
    Simulator sim(sim_grid(), disc_tuned(), 1e-2, HeatSource2D{}, HeatSource2D{}, dt);
    sim.set_state_from_slow(slow4());
    sim.advance(T);
    return Vec(sim.project_slow());
  };
  Vec ref = run(2.5e-4);
  double e1 = (run(2e-3) - ref).lpNorm<Eigen::Infinity>();
  double e2 = (run(1e-3) - ref).lpNorm<Eigen::Infinity>();
  CHECK(e1 / e2 > 3.0);
  CHECK(e1 / e2 < 5.8);
}

TEST_CASE("reduced system matches the continuum assembly") {
  const double gamma = 1e-2;

  // continuum reference over the same physical configuration
  ReducedSystem bare =
      assemble_reduced(cont_tuned(), cont_pairs(), TrigField{}, TrigField{}, gamma);
  QuadraticSystem qc = to_quadratic(bare);
  auto sym = [](const Tensor3R& K, int i, int j, int l) {
    return 0.5 * (K.at(i, j, l) + K.at(i, l, j));
  };

  Simulator sim(sim_grid(), disc_tuned(), gamma, HeatSource2D{}, HeatSource2D{}, 0.02);
  QuadraticSystem qd = sim.reduced_system();
  REQUIRE(qd.N == 4);
  CHECK(qd.g.cwiseAbs().maxCoeff() < 1e-14);
  CHECK(qd.M.cwiseAbs().maxCoeff() < 1e-3);

  double scale = tensor_max(qc.K);
  REQUIRE(scale > 0.0);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int l = 0; l < 4; ++l)
        CHECK(std::abs(sym(qd.K, i, j, l) - sym(qc.K, i, j, l)) < 0.15 * scale);

  // sources: the linear and constant parts land within discretization error
  ControlTarget tgt;
  tgt.Tpp = Mat(2, 2);
  tgt.Tpp << 0.05, -0.02, 0.03, 0.01;
  tgt.Tmm = Mat(2, 2);
  tgt.Tmm << -0.04, 0.02, 0.01, -0.03;
  tgt.Tpm = Mat(2, 2);
  tgt.Tpm << 0.02, 0.01, -0.03, 0.04;
  tgt.Tmp = Mat(2, 2);
  tgt.Tmp << -0.01, 0.03, 0.02, -0.02;
  HeatSource2D u1 = solve_control(tgt, cont_pairs(), cont_tuned(), 8);
  Vec fp(2), fm(2);
  fp << 0.1, -0.05;
  fm << 0.08, 0.03;
  HeatSource2D eta = solve_forcing(fp, fm, cont_pairs(), cont_tuned(), 8);

  Mat Mref(4, 4);
  Mref.topLeftCorner(2, 2) = tgt.Tpp;
  Mref.topRightCorner(2, 2) = tgt.Tpm;
  Mref.bottomLeftCorner(2, 2) = tgt.Tmp;
  Mref.bottomRightCorner(2, 2) = tgt.Tmm;
  Vec fref(4);
  fref << fp(0), fp(1), fm(0), fm(1);

  Simulator sims(sim_grid(), disc_tuned(), gamma, u1, eta, 0.02);
  QuadraticSystem qs = sims.reduced_system();
  double mscale = Mref.cwiseAbs().maxCoeff();
  CHECK((qs.M - Mref).cwiseAbs().maxCoeff() < 0.15 * mscale);
  CHECK((qs.g - fref).cwiseAbs().maxCoeff() < 0.15 * fref.cwiseAbs().maxCoeff());
}

TEST_CASE("off-subspace content scales quadratically with gamma") {
  auto fast_at = [&](double gamma) {
    Simulator sim(sim_grid(), disc_tuned(), gamma, HeatSource2D{}, HeatSource2D{}, 0.02);
    sim.set_state_from_slow(slow4());
    sim.advance(1.0);
    return sim.fast_norm();
  };
  double f2 = fast_at(1e-2), f3 = fast_at(1e-3);
  CHECK(f3 > 0.0);
  double slope = std::log(f2 / f3) / std::log(10.0);
  CHECK(slope > 1.3);
}

TEST_CASE("advective stability guard and non-finite detection") {
  Simulator sim(sim_grid(), disc_tuned(), 1.0, HeatSource2D{}, HeatSource2D{}, 0.1);
  Vec huge = Vec::Constant(4, 50.0);
  sim.set_state_from_slow(huge);
  CHECK(code_of([&] { sim.step(); }) == ErrorCode::CFLViolation);

  sim.set_state_from_slow(Vec::Constant(4, 1e-3));
  sim.state().w[1](5) = std::numeric_limits<double>::quiet_NaN();
  CHECK(code_of([&] { sim.step(); }) == ErrorCode::NaNDetected);
}

TEST_CASE("constructor gates on sources and geometry") {
  Grid g = sim_grid();
  const HeatProfile& p = disc_tuned();
  HeatSource2D none;

  Grid wrong = g;
  wrong.h += 0.5;
  CHECK(code_of([&] { Simulator s(wrong, p, 1e-2, none, none, 0.02); }) ==
        ErrorCode::PreconditionError);
  CHECK(code_of([&] { Simulator s(g, p, 1e-2, none, none, -0.1); }) ==
        ErrorCode::PreconditionError);
  CHECK(code_of([&] { Simulator s(g, p, 0.0, none, none, 0.02); }) ==
        ErrorCode::PreconditionError);

  // base correction reaching into the quiescent layer
  HeatSource2D low;
  low.basis = BumpBasis{0.2, 3.0, 2};
  low.cosc[1] = Vec::Ones(2);
  CHECK(code_of([&] { Simulator s(g, p, 1e-2, low, none, 0.02); }) ==
        ErrorCode::SupportViolation);

  // harmonic too high to stay clear of the evolved band
  HeatSource2D alias;
  alias.basis = BumpBasis{1.4, 6.5, 2};
  alias.cosc[12] = Vec::Ones(2);
  CHECK(code_of([&] { Simulator s(g, p, 1e-2, alias, none, 0.02); }) ==
        ErrorCode::PreconditionError);

  // forcing touching the wall
  HeatSource2D atwall;
  atwall.basis = BumpBasis{0.0, 3.0, 2};
  atwall.cosc[1] = Vec::Ones(2);
  CHECK(code_of([&] { Simulator s(g, p, 1e-2, none, atwall, 0.02); }) ==
        ErrorCode::SupportViolation);

  // x-independent forcing with nonzero strip mean
  HeatSource2D biased;
  biased.basis = BumpBasis{2.0, 4.0, 1};
  biased.cosc[0] = Vec::Ones(1);
  CHECK(code_of([&] { Simulator s(g, p, 1e-2, none, biased, 0.02); }) ==
        ErrorCode::MeanViolation);

  // forcing harmonic beyond the dealias cutoff
  HeatSource2D high;
  high.basis = BumpBasis{2.0, 4.0, 1};
  high.cosc[g.kcut() + 1] = Vec::Ones(1);
  CHECK(code_of([&] { Simulator s(g, p, 1e-2, none, high, 0.02); }) ==
        ErrorCode::PreconditionError);
}

}  // TEST_SUITE

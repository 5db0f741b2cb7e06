#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "marangoni/control.hpp"
#include "marangoni/profile.hpp"
#include "marangoni/spectral.hpp"

using namespace marangoni;

namespace {

const HeatProfile& tuned2() {
  static TuneResult t = [] {
    ProfileParams p;
    p.N = 2;
    p.kappa = 0.02;
    p.z0 = 0.1;
    p.h = 10.0;
    p.nu = 100.0;
    return tune_d(p, TuneMode::Finite);
  }();
  return t.profile;
}

const std::vector<ModePair>& pairs2() {
  static std::vector<ModePair> p = biorthogonalize(tuned2(), 2);
  return p;
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

}  // namespace

TEST_SUITE("control") {

TEST_CASE("bump basis confinement and derivatives") {
  BumpBasis b{1.0, 3.0, 5};
  for (int n = 0; n < b.size; ++n) {
    CHECK(b.value(n, 0.9) == 0.0);
    CHECK(b.value(n, 1.0) == 0.0);
    CHECK(b.value(n, 3.0) == 0.0);
    CHECK(b.value(n, 3.2) == 0.0);
    CHECK(b.deriv(n, 1.0) == 0.0);
    CHECK(b.deriv(n, 3.0) == 0.0);
    const double e = 1e-6;
    for (double y : {1.3, 2.0, 2.7}) {
      double fd = (b.value(n, y + e) - b.value(n, y - e)) / (2 * e);
      CHECK(b.deriv(n, y) == doctest::Approx(fd).epsilon(1e-5));
    }
  }
  CHECK(b.value(0, 2.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(b.value(1, 2.0) == doctest::Approx(0.0));  // P_1 vanishes at the window center
}

TEST_CASE("source rendering sums the basis coefficients") {
  HeatSource2D src;
  src.basis = BumpBasis{0.5, 2.5, 3};
  src.cosc[2] = Vec::Zero(3);
  src.cosc[2] << 1.0, -0.5, 0.25;
  src.sinc[1] = Vec::Zero(3);
  src.sinc[1] << 0.3, 0.0, -0.1;
  TrigField f = src.to_field();
  double y = 1.7, x = 0.9;
  double c2 = src.cosc[2](0) * src.basis.value(0, y) + src.cosc[2](1) * src.basis.value(1, y) +
              src.cosc[2](2) * src.basis.value(2, y);
  double s1 = src.sinc[1](0) * src.basis.value(0, y) + src.sinc[1](2) * src.basis.value(2, y);
  CHECK(f.eval(x, y) ==
        doctest::Approx(c2 * std::cos(2 * x) + s1 * std::sin(x)).epsilon(1e-13));
  CHECK(f.has_derivatives());
  CHECK(HeatSource2D{}.empty());
  CHECK(!src.empty());
}

TEST_CASE("sidon sets are verified up to p = 8") {
  for (int p = 1; p <= 8; ++p) {
    SidonSet s = sidon_set(p);
    CHECK(s.p == p);
    CHECK((int)s.ks.size() == p);
    CHECK(verify_sidon(s));
    for (size_t i = 0; i < s.ks.size(); ++i) {
      CHECK(s.ks[i] % 3 == 1);
      if (i > 0) CHECK(s.ks[i] > 3 * s.ks[i - 1]);
    }
  }
  CHECK(sidon_set(2).ks == std::vector<int>{1, 7});
  CHECK(sidon_set(3).ks == std::vector<int>{1, 7, 19});
  CHECK(sidon_set(4).ks == std::vector<int>{1, 7, 19, 58});

  SidonSet collide{3, {1, 4, 7}};  // 1 + 7 = 4 + 4
  CHECK(!verify_sidon(collide));
  SidonSet residue{2, {1, 9}};
  CHECK(!verify_sidon(residue));
  SidonSet short_list{3, {1, 7}};
  CHECK(!verify_sidon(short_list));
}

TEST_CASE("p-decomposition pivots, solve, and failure modes") {
  SidonSet s = sidon_set(2);
  std::vector<int> ks{1, 7, 2, 8, 14};
  Tensor3 G(5);
  G.at(2, 0, 0) = 0.7;
  G.at(3, 0, 1) = 0.4;
  G.at(3, 1, 0) = 0.4;
  G.at(4, 1, 1) = -1.1;

  PDecomposition pd = check_p_decomposition(G, ks, s);
  CHECK(pd.solvable);
  REQUIRE(pd.pivots.size() == 3);
  CHECK(std::get<2>(pd.pivots[0]) == doctest::Approx(0.7));
  CHECK(std::get<2>(pd.pivots[1]) == doctest::Approx(0.8));  // both orders summed
  CHECK(std::get<2>(pd.pivots[2]) == doctest::Approx(-1.1));
  CHECK(pd.sum_rows == std::vector<int>{2, 3, 4});
  CHECK(pd.sum_ks == std::vector<int>{2, 8, 14});

  Mat b(2, 2);
  b << 0.14, -0.4, 99.0, 0.55;  // lower triangle is never read
  auto u = pd.solve(b);
  CHECK(u.at(2) == doctest::Approx(0.2));
  CHECK(u.at(8) == doctest::Approx(-0.5));
  CHECK(u.at(14) == doctest::Approx(0.55 / -1.1));

  Tensor3 Gu = G;
  Gu.at(4, 1, 1) = 5e-11;
  CHECK(code_of([&] { check_p_decomposition(Gu, ks, s); }) == ErrorCode::PivotUnderflow);

  std::vector<int> ks_bad{1, 7, 2, 8, 15};
  CHECK(code_of([&] { check_p_decomposition(G, ks_bad, s); }) == ErrorCode::MismatchedBases);
}

TEST_CASE("svd least squares: consistency, minimum norm, rank report") {
  Mat A(4, 2);
  A << 1, 2, 3, -1, 0.5, 4, -2, 1;
  Vec xtrue(2);
  xtrue << 0.7, -1.3;
  Vec b = A * xtrue;
  int rank = 0;
  Vec x = svd_least_squares(A, b, 1e-12, &rank);
  CHECK(rank == 2);
  CHECK((x - xtrue).norm() < 1e-12);

  Mat U(1, 2);
  U << 1, 1;
  Vec s = svd_least_squares(U, Vec::Constant(1, 3.0), 1e-12, &rank);
  CHECK(rank == 1);
  CHECK(s(0) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(s(1) == doctest::Approx(1.5).epsilon(1e-12));

  Mat D(2, 2);
  D << 1, 1, 1, 1;
  Vec bd(2);
  bd << 1, 1;
  Vec xd = svd_least_squares(D, bd, 1e-12, &rank);
  CHECK(rank == 1);
  CHECK(xd(0) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(xd(1) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("control source reproduces the requested linear blocks") {
  const auto& pairs = pairs2();
  const HeatProfile& prof = tuned2();
  const double h = prof.params().h, d1 = prof.delta1();

  ControlTarget t;
  t.Tpp = Mat(2, 2);
  t.Tpp << 0.3, -0.1, 0.2, 0.05;
  t.Tmm = Mat(2, 2);
  t.Tmm << -0.2, 0.4, 0.1, -0.3;
  t.Tpm = Mat(2, 2);
  t.Tpm << 0.15, -0.25, 0.35, 0.1;
  t.Tmp = Mat(2, 2);
  t.Tmp << -0.05, 0.2, -0.15, 0.3;

  HeatSource2D src = solve_control(t, pairs, prof, 24);
  CHECK(src.basis.lo == doctest::Approx(d1 + (h - d1) / 20.0).epsilon(1e-14));
  CHECK(src.basis.hi == doctest::Approx(h - (h - d1) / 20.0).epsilon(1e-14));

  TrigField u1 = src.to_field();
  CHECK(u1.eval(0.7, d1) == 0.0);
  CHECK(u1.eval(0.7, h) == 0.0);

  Mat M = compute_M(u1, pairs, prof.grid(), d1);
  CHECK((M.topLeftCorner(2, 2) - t.Tpp).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((M.bottomRightCorner(2, 2) - t.Tmm).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((M.topRightCorner(2, 2) - t.Tpm).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((M.bottomLeftCorner(2, 2) - t.Tmp).cwiseAbs().maxCoeff() < 1e-8);

  // one y-profile per harmonic cannot satisfy eight independent rows
  CHECK(code_of([&] { solve_control(t, pairs, prof, 1); }) == ErrorCode::RankDeficient);

  ControlTarget wrong = t;
  wrong.Tpp = Mat::Zero(1, 1);
  CHECK(code_of([&] { solve_control(wrong, pairs, prof, 8); }) ==
        ErrorCode::PreconditionError);
}

TEST_CASE("forcing source reproduces the requested projections") {
  const auto& pairs = pairs2();
  const HeatProfile& prof = tuned2();
  const double h = prof.params().h;

  Vec fp(2), fm(2);
  fp << 0.12, -0.07;
  fm << 0.05, 0.09;
  HeatSource2D src = solve_forcing(fp, fm, pairs, prof, 6);

  // harmonics 1..N only, so the strip mean vanishes identically
  for (const auto& [m, c] : src.cosc) CHECK((m == 1 || m == 2));
  for (const auto& [m, c] : src.sinc) CHECK((m == 1 || m == 2));

  double d0 = h / 4.0, margin = (h - d0) / 20.0;
  CHECK(src.basis.lo == doctest::Approx(d0 + margin).epsilon(1e-14));
  TrigField eta = src.to_field();
  CHECK(eta.eval(1.1, d0) == 0.0);

  Vec f = compute_f(eta, pairs, prof.grid());
  CHECK(f(0) == doctest::Approx(fp(0)).epsilon(1e-8));
  CHECK(f(1) == doctest::Approx(fp(1)).epsilon(1e-8));
  CHECK(f(2) == doctest::Approx(fm(0)).epsilon(1e-8));
  CHECK(f(3) == doctest::Approx(fm(1)).epsilon(1e-8));

  // explicit window start
  HeatSource2D src2 = solve_forcing(fp, fm, pairs, prof, 6, 3.0);
  CHECK(src2.basis.lo == doctest::Approx(3.0 + (h - 3.0) / 20.0).epsilon(1e-14));

  CHECK(code_of([&] { solve_forcing(fp, fm, pairs, prof, 6, 6.0); }) ==
        ErrorCode::PreconditionError);
  Vec bad(1);
  bad << 1.0;
  CHECK(code_of([&] { solve_forcing(bad, fm, pairs, prof, 6); }) ==
        ErrorCode::PreconditionError);
}

}  // TEST_SUITE

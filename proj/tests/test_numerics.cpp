#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "doctest.h"
#include "marangoni/numerics.hpp"

using namespace marangoni;

TEST_SUITE("numerics") {

TEST_CASE("gauss-legendre rules integrate polynomials of degree 2n-1") {
  const GLRule& r4 = gauss_legendre(4);
  REQUIRE(r4.x.size() == 4);
  double m7 = 0.0, m6 = 0.0;
  for (size_t i = 0; i < r4.x.size(); ++i) {
    m7 += r4.w[i] * std::pow(r4.x[i], 7);
    m6 += r4.w[i] * std::pow(r4.x[i], 6);
  }
  CHECK(std::abs(m7) < 1e-15);
  CHECK(m6 == doctest::Approx(2.0 / 7.0).epsilon(1e-14));

  const GLRule& r16 = gauss_legendre(16);
  double s = 0.0;
  for (size_t i = 0; i < r16.x.size(); ++i) s += r16.w[i] * std::exp(r16.x[i]);
  CHECK(s == doctest::Approx(std::exp(1.0) - std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("composite grids integrate across panel edges") {
  CompositeGrid g = make_grid({0.0, 0.3, 1.0});
  CHECK(g.a() == 0.0);
  CHECK(g.b() == 1.0);
  CHECK(g.integrate([](double y) { return std::cos(y); }) ==
        doctest::Approx(std::sin(1.0)).epsilon(1e-14));

  Complex I = g.integrate_c([](double y) { return std::exp(Complex(0.0, 2.0) * y); });
  Complex expect = (std::exp(Complex(0.0, 2.0)) - 1.0) / Complex(0.0, 2.0);
  CHECK(std::abs(I - expect) < 1e-14);

  std::vector<double> vals(g.nodes.size());
  for (size_t i = 0; i < g.nodes.size(); ++i) vals[i] = std::sin(g.nodes[i]);
  CHECK(g.integrate_nodal(vals) ==
        doctest::Approx(g.integrate([](double y) { return std::sin(y); })).epsilon(1e-15));

  for (double y : {0.01, 0.3, 0.77, 1.0}) {
    int p = g.panel_of(y);
    CHECK(g.panels[p].a <= y + 1e-15);
    CHECK(y <= g.panels[p].b + 1e-15);
  }
}

TEST_CASE("geometric edges start fine and span the interval") {
  std::vector<double> e = geometric_edges(0.2, 10.0, 12, 0.05);
  REQUIRE(e.size() == 13);
  CHECK(e.front() == doctest::Approx(0.2));
  CHECK(e.back() == doctest::Approx(10.0));
  for (size_t i = 1; i < e.size(); ++i) CHECK(e[i] > e[i - 1]);
  CHECK(e[1] - e[0] < 0.2);  // near the requested first width, far below uniform
  // uniform fallback when w0 is coarser than uniform spacing
  std::vector<double> u = geometric_edges(0.0, 1.0, 4, 10.0);
  for (size_t i = 0; i + 1 < u.size(); ++i)
    CHECK(u[i + 1] - u[i] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("profile grid puts panel edges on the mollifier break points") {
  const double h = 10.0, z0 = 0.1, kappa = 0.02;
  CompositeGrid g = make_profile_grid(h, z0, kappa);
  CHECK(g.a() == doctest::Approx(0.0));
  CHECK(g.b() == doctest::Approx(h));
  CHECK(g.nodes.size() == g.panels.size() * 16);
  auto has_edge = [&](double y) {
    for (const auto& p : g.panels)
      if (std::abs(p.a - y) < 1e-12 || std::abs(p.b - y) < 1e-12) return true;
    return false;
  };
  CHECK(has_edge(z0 - kappa));
  CHECK(has_edge(z0));
  CHECK(has_edge(z0 + kappa));
  // the grid resolves the mollifier: integral of a spike supported on
  // (z0-kappa, z0+kappa) matches a brute-force refinement
  auto spike = [&](double y) {
    double t = (y - z0) / kappa;
    return std::abs(t) < 1.0 ? std::exp(-1.0 / (1.0 - t * t)) : 0.0;
  };
  std::vector<double> fine;
  for (int i = 0; i <= 200; ++i) fine.push_back(z0 - kappa + 2.0 * kappa * i / 200.0);
  double ref = make_grid(fine, 8).integrate(spike);
  CHECK(g.integrate(spike) == doctest::Approx(ref).epsilon(1e-12));
}

TEST_CASE("shc is accurate through zero") {
  CHECK(shc(0.0) == 1.0);
  CHECK(shc(1e-8) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(shc(2.0) == doctest::Approx(std::sinh(2.0) / 2.0).epsilon(1e-15));
  Complex z(0.3, -0.4);
  CHECK(std::abs(shc(z) - std::sinh(z) / z) < 1e-15);
  CHECK(std::abs(shc(Complex(1e-9, 1e-9)) - 1.0) < 1e-15);
}

TEST_CASE("sinh and cosh ratios never overflow") {
  CHECK(sinh_ratio(3.0, 5.0) == doctest::Approx(std::sinh(3.0) / std::sinh(5.0)).epsilon(1e-14));
  // e^{a-b} asymptotics for large arguments
  CHECK(sinh_ratio(300.0, 500.0) == doctest::Approx(std::exp(-200.0)).epsilon(1e-12));
  CHECK(std::isfinite(sinh_ratio(700.0, 701.0)));
  Complex a(2.0, 1.0), b(3.0, -2.0);
  CHECK(std::abs(sinh_ratio(a, b) - std::sinh(a) / std::sinh(b)) < 1e-14);
  CHECK(std::abs(cosh_sinh_ratio(a, b) - std::cosh(a) / std::sinh(b)) < 1e-14);
  CHECK(std::abs(cosh_sinh_ratio(Complex(0.0, 0.0), Complex(2.0, 0.0)) -
                 1.0 / std::sinh(2.0)) < 1e-15);
}

TEST_CASE("sqrt_re_pos picks the right half plane") {
  CHECK(sqrt_re_pos(Complex(4.0, 0.0)) == Complex(2.0, 0.0));
  Complex mi = sqrt_re_pos(Complex(-4.0, 0.0));
  CHECK(mi.real() == doctest::Approx(0.0));
  CHECK(mi.imag() == doctest::Approx(2.0));  // tie broken upward
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 50; ++i) {
    Complex z(u(rng), u(rng));
    Complex s = sqrt_re_pos(z);
    CHECK(std::abs(s * s - z) < 1e-13);
    CHECK(s.real() >= -1e-15);
  }
}

TEST_CASE("tridiagonal solve matches a dense solve") {
  const int n = 12;
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> lo(n - 1), di(n), up(n - 1), rhs(n);
  for (int i = 0; i < n; ++i) {
    di[i] = 4.0 + u(rng);
    rhs[i] = u(rng);
  }
  for (int i = 0; i < n - 1; ++i) {
    lo[i] = u(rng);
    up[i] = u(rng);
  }
  std::vector<double> x = solve_tridiag(lo, di, up, rhs);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    A(i, i) = di[i];
    b(i) = rhs[i];
  }
  for (int i = 0; i < n - 1; ++i) {
    A(i + 1, i) = lo[i];
    A(i, i + 1) = up[i];
  }
  Eigen::VectorXd xd = A.partialPivLu().solve(b);
  for (int i = 0; i < n; ++i) CHECK(x[i] == doctest::Approx(xd(i)).epsilon(1e-12));

  std::vector<Complex> lc{Complex(0.1, 0.2)}, dc{Complex(3.0, 1.0), Complex(2.0, -1.0)},
      uc{Complex(-0.3, 0.1)}, rc{Complex(1.0, 0.0), Complex(0.0, 1.0)};
  std::vector<Complex> xc = solve_tridiag(lc, dc, uc, rc);
  CHECK(std::abs(dc[0] * xc[0] + uc[0] * xc[1] - rc[0]) < 1e-14);
  CHECK(std::abs(lc[0] * xc[0] + dc[1] * xc[1] - rc[1]) < 1e-14);

  std::vector<double> z1{0.0};
  CHECK_THROWS_AS(solve_tridiag<double>({}, z1, {}, {1.0}), Error);
}

TEST_CASE("brent finds bracketed roots to tolerance") {
  double r = brent([](double x) { return std::cos(x); }, 1.0, 2.0, 1e-14);
  CHECK(r == doctest::Approx(M_PI / 2.0).epsilon(1e-13));
  double q = brent([](double x) { return x * x * x - 2.0; }, 0.0, 2.0, 1e-14);
  CHECK(q == doctest::Approx(std::cbrt(2.0)).epsilon(1e-13));
}

TEST_CASE("damped newton converges on a smooth system") {
  auto F = [](const std::vector<double>& x) {
    return std::vector<double>{x[0] * x[0] + x[1] * x[1] - 4.0, x[0] - x[1]};
  };
  NewtonResult r = damped_newton(F, {1.0, 0.5});
  CHECK(r.converged);
  CHECK(r.resid_norm < 1e-12);
  CHECK(r.iters < 25);
  CHECK(r.x[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
  CHECK(r.x[1] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
}

TEST_CASE("damped newton reports failure on a rootless system") {
  auto F = [](const std::vector<double>& x) {
    return std::vector<double>{1.0 + x[0] * x[0]};
  };
  NewtonResult r = damped_newton(F, {1.0}, 1e-13, 25);
  CHECK(!r.converged);
  CHECK(r.resid_norm >= 1.0 - 1e-12);
}

TEST_CASE("elementary symmetric polynomials") {
  std::vector<double> e = elementary_symmetric({1.0, 2.0, 3.0});
  REQUIRE(e.size() == 4);
  CHECK(e[0] == doctest::Approx(1.0));
  CHECK(e[1] == doctest::Approx(6.0));
  CHECK(e[2] == doctest::Approx(11.0));
  CHECK(e[3] == doctest::Approx(6.0));
}

TEST_CASE("polynomial evaluation and derivative") {
  std::vector<double> c{1.0, -2.0, 3.0};
  CHECK(poly_eval(c, 2.0) == doctest::Approx(9.0));
  CHECK(poly_deriv(c, 2.0) == doctest::Approx(10.0));
  CHECK(poly_eval({5.0}, 100.0) == doctest::Approx(5.0));
  CHECK(poly_deriv({5.0}, 100.0) == doctest::Approx(0.0));
}

TEST_CASE("legendre polynomials satisfy known values and orthogonality") {
  CHECK(legendre_eval(0, 0.3) == doctest::Approx(1.0));
  CHECK(legendre_eval(1, 0.3) == doctest::Approx(0.3));
  CHECK(legendre_eval(2, 0.5) == doctest::Approx(-0.125));
  CHECK(legendre_eval(5, 1.0) == doctest::Approx(1.0));
  CHECK(legendre_eval(4, -1.0) == doctest::Approx(1.0));
  const GLRule& r = gauss_legendre(16);
  double dot = 0.0, nrm = 0.0;
  for (size_t i = 0; i < r.x.size(); ++i) {
    dot += r.w[i] * legendre_eval(3, r.x[i]) * legendre_eval(4, r.x[i]);
    nrm += r.w[i] * legendre_eval(4, r.x[i]) * legendre_eval(4, r.x[i]);
  }
  CHECK(std::abs(dot) < 1e-15);
  CHECK(nrm == doctest::Approx(2.0 / 9.0).epsilon(1e-13));
}

}  // TEST_SUITE

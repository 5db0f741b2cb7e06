#include "marangoni/bvp.hpp"

#include <cmath>

namespace marangoni {

struct BvpSolution::Data {
  CompositeGrid grid;
  double k = 1.0, h = 1.0, c0 = 0.0;
  BvpKind kind = BvpKind::Neumann;
  std::function<double(double)> f;
  // cumulants at panel edges; index i refers to edge i (0..P)
  std::vector<double> C1, J1, D2, D3;
  double D2h = 0.0, D3h = 0.0, E = 0.0;
};

namespace {

struct Cums {
  double C1, J1, D2, D3;
};

// cumulants at arbitrary y: fresh partial-panel quadrature joined to the edge values
Cums cums_at(const BvpSolution::Data& d, double y) {
  const auto& g = d.grid;
  int p = g.panel_of(y);
  const Panel& pan = g.panels[p];
  const GLRule& rule = gauss_legendre(g.nodes_per_panel);
  Cums c{};
  const double k = d.k, h = d.h;
  // forward part on [a, y]
  {
    double cen = 0.5 * (pan.a + y), s = 0.5 * (y - pan.a);
    double sC = 0, sD2 = 0, sD3 = 0;
    if (s > 0) {
      for (size_t q = 0; q < rule.x.size(); ++q) {
        double t = cen + s * rule.x[q], w = s * rule.w[q], fv = d.f(t);
        sC += w * std::exp(-k * (y - t)) * fv;
        sD2 += w * std::exp(-k * t) * fv;
        sD3 += w * std::exp(-k * (h - t)) * fv;
      }
    }
    c.C1 = std::exp(-k * (y - pan.a)) * d.C1[p] + sC;
    c.D2 = d.D2[p] + sD2;
    c.D3 = d.D3[p] + sD3;
  }
  // backward part on [y, b]
  {
    double cen = 0.5 * (y + pan.b), s = 0.5 * (pan.b - y);
    double sJ = 0;
    if (s > 0) {
      for (size_t q = 0; q < rule.x.size(); ++q) {
        double t = cen + s * rule.x[q], w = s * rule.w[q];
        sJ += w * std::exp(-k * (t - y)) * d.f(t);
      }
    }
    c.J1 = std::exp(-k * (pan.b - y)) * d.J1[p + 1] + sJ;
  }
  return c;
}

}  // namespace

BvpSolution solve_bvp(const CompositeGrid& grid, double k, BvpKind kind,
                      std::function<double(double)> f, double c0) {
  require(k > 0.0, ErrorCode::PreconditionError, "solve_bvp needs k > 0");
  require(grid.a() == 0.0, ErrorCode::PreconditionError, "solve_bvp grid starts at 0");
  auto d = std::make_shared<BvpSolution::Data>();
  d->grid = grid;
  d->k = k;
  d->h = grid.b();
  d->c0 = c0;
  d->kind = kind;
  d->f = std::move(f);
  const int P = (int)grid.panels.size();
  d->C1.assign(P + 1, 0.0);
  d->J1.assign(P + 1, 0.0);
  d->D2.assign(P + 1, 0.0);
  d->D3.assign(P + 1, 0.0);
  const double h = d->h;
  for (int p = 0; p < P; ++p) {
    const Panel& pan = grid.panels[p];
    double sC = 0, sD2 = 0, sD3 = 0;
    for (int q = 0; q < grid.nodes_per_panel; ++q) {
      int idx = pan.first + q;
      double t = grid.nodes[idx], w = grid.weights[idx], fv = d->f(t);
      sC += w * std::exp(-k * (pan.b - t)) * fv;
      sD2 += w * std::exp(-k * t) * fv;
      sD3 += w * std::exp(-k * (h - t)) * fv;
    }
    d->C1[p + 1] = std::exp(-k * (pan.b - pan.a)) * d->C1[p] + sC;
    d->D2[p + 1] = d->D2[p] + sD2;
    d->D3[p + 1] = d->D3[p] + sD3;
  }
  for (int p = P - 1; p >= 0; --p) {
    const Panel& pan = grid.panels[p];
    double sJ = 0;
    for (int q = 0; q < grid.nodes_per_panel; ++q) {
      int idx = pan.first + q;
      double t = grid.nodes[idx], w = grid.weights[idx];
      sJ += w * std::exp(-k * (t - pan.a)) * d->f(t);
    }
    d->J1[p] = std::exp(-k * (pan.b - pan.a)) * d->J1[p + 1] + sJ;
  }
  d->D2h = d->D2[P];
  d->D3h = d->D3[P];
  d->E = std::exp(-2.0 * k * h);
  BvpSolution s;
  s.data = d;
  return s;
}

double BvpSolution::k() const { return data->k; }
const CompositeGrid& BvpSolution::grid() const { return data->grid; }

double BvpSolution::value(double y) const {
  const auto& d = *data;
  const double k = d.k, h = d.h, E = d.E;
  Cums c = cums_at(d, y);
  double ey = std::exp(-k * y), ehy = std::exp(-k * (h - y));
  double e2hy = std::exp(-k * (2 * h - y)), ehpy = std::exp(-k * (h + y));
  double tailD3 = d.D3h - c.D3;
  switch (d.kind) {
    case BvpKind::Neumann:
      return -(c.C1 + c.J1 + ey * d.D2h + ehy * d.D3h + e2hy * c.D2 + ehpy * tailD3) /
             (2.0 * k * (1.0 - E));
    case BvpKind::Dirichlet:
      return -(c.C1 + c.J1 - ey * d.D2h - ehy * d.D3h + e2hy * c.D2 + ehpy * tailD3) /
             (2.0 * k * (1.0 - E));
    case BvpKind::Mixed: {
      double u = -(c.C1 + c.J1 + ey * d.D2h - ehy * d.D3h - e2hy * c.D2 - ehpy * tailD3) /
                 (2.0 * k * (1.0 + E));
      double xi = -ey * (-std::expm1(-2.0 * k * (h - y))) / (k * (1.0 + E));
      return u + d.c0 * xi;
    }
  }
  fail(ErrorCode::PreconditionError, "bad BvpKind");
}

double BvpSolution::deriv(double y) const {
  const auto& d = *data;
  const double k = d.k, h = d.h, E = d.E;
  Cums c = cums_at(d, y);
  double ey = std::exp(-k * y), ehy = std::exp(-k * (h - y));
  double e2hy = std::exp(-k * (2 * h - y)), ehpy = std::exp(-k * (h + y));
  double tailD3 = d.D3h - c.D3;
  switch (d.kind) {
    case BvpKind::Neumann:
      return (c.C1 - c.J1 + ey * d.D2h - ehy * d.D3h - e2hy * c.D2 + ehpy * tailD3) /
             (2.0 * (1.0 - E));
    case BvpKind::Dirichlet:
      return (c.C1 - c.J1 - ey * d.D2h + ehy * d.D3h - e2hy * c.D2 + ehpy * tailD3) /
             (2.0 * (1.0 - E));
    case BvpKind::Mixed: {
      double du = (c.C1 - c.J1 + ey * d.D2h + ehy * d.D3h + e2hy * c.D2 - ehpy * tailD3) /
                  (2.0 * (1.0 + E));
      double dxi = ey * (1.0 + std::exp(-2.0 * k * (h - y))) / (1.0 + E);
      return du + d.c0 * dxi;
    }
  }
  fail(ErrorCode::PreconditionError, "bad BvpKind");
}

std::vector<double> fd_solve_bvp(double h, double k, BvpKind kind,
                                 const std::function<double(double)>& f, int n, double c0) {
  require(n >= 2, ErrorCode::PreconditionError, "fd_solve_bvp n >= 2");
  const double dy = h / n, idy2 = 1.0 / (dy * dy);
  switch (kind) {
    case BvpKind::Dirichlet: {
      // interior unknowns 1..n-1
      std::vector<double> lo(n - 2, idy2), up(n - 2, idy2), di(n - 1, -2.0 * idy2 - k * k),
          rhs(n - 1);
      for (int i = 1; i < n; ++i) rhs[i - 1] = f(i * dy);
      auto x = solve_tridiag(lo, di, up, rhs);
      std::vector<double> u(n + 1, 0.0);
      for (int i = 1; i < n; ++i) u[i] = x[i - 1];
      return u;
    }
    case BvpKind::Neumann:
    case BvpKind::Mixed: {
      // unknowns 0..n (Neumann via ghost mirror), Mixed: u'(0)=c0 ghost, u(n)=0
      int m = (kind == BvpKind::Neumann) ? n + 1 : n;  // Mixed drops the last row
      std::vector<double> lo(m - 1, idy2), up(m - 1, idy2), di(m, -2.0 * idy2 - k * k), rhs(m);
      for (int i = 0; i < m; ++i) rhs[i] = f(i * dy);
      up[0] = 2.0 * idy2;  // ghost u_{-1} = u_1 - 2 dy c0
      if (kind == BvpKind::Mixed) rhs[0] += 2.0 * c0 / dy;
      if (kind == BvpKind::Neumann) lo[m - 2] = 2.0 * idy2;  // ghost at the top wall
      auto x = solve_tridiag(lo, di, up, rhs);
      std::vector<double> u(n + 1, 0.0);
      for (int i = 0; i < m; ++i) u[i] = x[i];
      return u;
    }
  }
  fail(ErrorCode::PreconditionError, "bad BvpKind");
}

}  // namespace marangoni

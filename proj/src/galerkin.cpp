#include "marangoni/galerkin.hpp"

#include <cmath>

namespace marangoni {

TrigField mode_omega(const Mode& m, int sign) {
  TrigField f;
  if (sign > 0) f.add(m.k, XParity::Sin, m.v, m.dv);
  else {
    YFun v = m.v, dv = m.dv;
    f.add(m.k, XParity::Cos, [v](double y) { return -v(y); },
          [dv](double y) { return -dv(y); });
  }
  return f;
}

TrigField mode_temp(const Mode& m, int sign) {
  TrigField f;
  f.add(m.k, sign > 0 ? XParity::Cos : XParity::Sin, m.th, m.dth);
  return f;
}

TrigField mode_psi(const Mode& m, int sign) {
  double kk = m.k;
  YFun P = m.P, dP = m.dP;
  double c = sign > 0 ? -kk : kk;
  TrigField f;
  f.add(m.k, sign > 0 ? XParity::Sin : XParity::Cos,
        [P, c](double y) { return c * P(y); }, [dP, c](double y) { return c * dP(y); });
  return f;
}

TrigField conj_omega(const ConjMode& c, int sign) {
  TrigField f;
  if (sign > 0) f.add(c.k, XParity::Sin, c.oz, c.doz);
  else {
    YFun oz = c.oz, doz = c.doz;
    f.add(c.k, XParity::Cos, [oz](double y) { return -oz(y); },
          [doz](double y) { return -doz(y); });
  }
  return f;
}

TrigField conj_temp(const ConjMode& c, int sign) {
  TrigField f;
  f.add(c.k, sign > 0 ? XParity::Cos : XParity::Sin, c.tt, c.dtt);
  return f;
}

GTensors compute_G(const std::vector<ModePair>& pairs, const CompositeGrid& g,
                   bool include_oz) {
  const int N = (int)pairs.size();
  GTensors G{Tensor3(N), Tensor3(N), Tensor3(N)};
  // pairing of one bracket pair against conjugate row i with row sign si
  auto rows = [&](const TrigField& bw, const TrigField& bo, int si, Tensor3& out, int j,
                  int l, double weight) {
    for (int i = 0; i < N; ++i) {
      double v = -inner(bw, conj_temp(pairs[i].conj, si), g);
      if (include_oz) v -= inner(bo, conj_omega(pairs[i].conj, si), g);
      out.at(i, j, l) += weight * v;
    }
  };
  for (int j = 0; j < N; ++j) {
    for (int l = 0; l < N; ++l) {
      TrigField pj_p = mode_psi(pairs[j].mode, +1), pj_m = mode_psi(pairs[j].mode, -1);
      TrigField wl_p = mode_temp(pairs[l].mode, +1), wl_m = mode_temp(pairs[l].mode, -1);
      TrigField ol_p = mode_omega(pairs[l].mode, +1), ol_m = mode_omega(pairs[l].mode, -1);
      rows(bracket(pj_p, wl_p), bracket(pj_p, ol_p), +1, G.ppp, j, l, 1.0);
      rows(bracket(pj_m, wl_m), bracket(pj_m, ol_m), +1, G.mmp, j, l, 1.0);
      // mixed block: coefficient of X_j^+ X_l^-, both bracket orders
      rows(bracket(pj_p, wl_m), bracket(pj_p, ol_m), -1, G.pmm, j, l, 1.0);
      TrigField pl_m = mode_psi(pairs[l].mode, -1);
      TrigField wj_p = mode_temp(pairs[j].mode, +1);
      TrigField oj_p = mode_omega(pairs[j].mode, +1);
      rows(bracket(pl_m, wj_p), bracket(pl_m, oj_p), -1, G.pmm, j, l, 1.0);
    }
  }
  return G;
}

namespace {

void check_support(const TrigField& u, double delta1, double h, const char* what) {
  for (const auto& t : u.terms()) {
    double scale = 0.0;
    for (int i = 0; i <= 32; ++i) scale = std::max(scale, std::abs(t.f(h * i / 32.0)));
    for (int i = 0; i <= 32; ++i) {
      double y = delta1 * i / 32.0;
      if (std::abs(t.f(y)) > 1e-10 * (1.0 + scale))
        fail(ErrorCode::SupportViolation,
             std::string(what) + " overlaps the quiescent layer [0, delta1]");
    }
  }
}

}  // namespace

Mat compute_M(const TrigField& u1, const std::vector<ModePair>& pairs,
              const CompositeGrid& g, double delta1) {
  const int N = (int)pairs.size();
  check_support(u1, delta1, g.b(), "u1");
  Mat M = Mat::Zero(2 * N, 2 * N);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      for (int si : {+1, -1}) {
        for (int sj : {+1, -1}) {
          TrigField br = bracket(mode_psi(pairs[j].mode, sj), conj_temp(pairs[i].conj, si));
          double v = inner(br, u1, g);
          int r = (si > 0 ? 0 : N) + i, c = (sj > 0 ? 0 : N) + j;
          M(r, c) = v;
        }
      }
    }
  }
  return M;
}

Vec compute_f(const TrigField& eta1, const std::vector<ModePair>& pairs,
              const CompositeGrid& g) {
  const int N = (int)pairs.size();
  double mean = 2.0 * M_PI * g.integrate(eta1.channel(0, XParity::Cos));
  double norm = std::sqrt(std::max(inner(eta1, eta1, g), 0.0));
  if (std::abs(mean) > 1e-10 * std::max(1.0, norm))
    fail(ErrorCode::MeanViolation, "eta1 has nonzero strip mean");
  Vec f = Vec::Zero(2 * N);
  for (int i = 0; i < N; ++i) {
    f(i) = inner(eta1, conj_temp(pairs[i].conj, +1), g);
    f(N + i) = inner(eta1, conj_temp(pairs[i].conj, -1), g);
  }
  return f;
}

Mat gram_matrix(const std::vector<ModePair>& pairs, double h, const CompositeGrid& g) {
  const int N = (int)pairs.size();
  const int n = 2 * N + 1;
  Mat G = Mat::Zero(n, n);
  // slot 0: constant mode e0 = (0,1), conjugate (0, 1/(2 pi h))
  std::vector<TrigField> eo(n), et(n), co(n), ct(n);
  et[0].add(0, XParity::Cos, [](double) { return 1.0; });
  ct[0].add(0, XParity::Cos, [h](double) { return 1.0 / (2.0 * M_PI * h); });
  for (int i = 0; i < N; ++i) {
    eo[1 + i] = mode_omega(pairs[i].mode, +1);
    et[1 + i] = mode_temp(pairs[i].mode, +1);
    co[1 + i] = conj_omega(pairs[i].conj, +1);
    ct[1 + i] = conj_temp(pairs[i].conj, +1);
    eo[1 + N + i] = mode_omega(pairs[i].mode, -1);
    et[1 + N + i] = mode_temp(pairs[i].mode, -1);
    co[1 + N + i] = conj_omega(pairs[i].conj, -1);
    ct[1 + N + i] = conj_temp(pairs[i].conj, -1);
  }
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      G(r, c) = inner(eo[r], co[c], g) + inner(et[r], ct[c], g);
  return G;
}

Vec ReducedSystem::evaluate(const Vec& X) const {
  require(X.size() == 2 * N, ErrorCode::PreconditionError, "state size");
  Vec dX = M * X + f;
  for (int i = 0; i < N; ++i) {
    double qp = 0.0, qm = 0.0;
    for (int j = 0; j < N; ++j) {
      for (int l = 0; l < N; ++l) {
        qp += Gppp.at(i, j, l) * X(j) * X(l) + Gmmp.at(i, j, l) * X(N + j) * X(N + l);
        qm += Gpmm.at(i, j, l) * X(j) * X(N + l);
      }
    }
    dX(i) += qp;
    dX(N + i) += qm;
  }
  return dX;
}

ReducedSystem assemble_reduced(const HeatProfile& prof, const std::vector<ModePair>& pairs,
                               const TrigField& u1, const TrigField& eta1, double gamma) {
  ReducedSystem sys;
  sys.N = (int)pairs.size();
  for (const auto& p : pairs) sys.ks.push_back(p.mode.k);
  const auto& g = prof.grid();
  GTensors G = compute_G(pairs, g);
  sys.Gppp = std::move(G.ppp);
  sys.Gmmp = std::move(G.mmp);
  sys.Gpmm = std::move(G.pmm);
  sys.M = u1.empty() ? Mat::Zero(2 * sys.N, 2 * sys.N)
                     : compute_M(u1, pairs, g, prof.delta1());
  sys.f = eta1.empty() ? Vec::Zero(2 * sys.N) : compute_f(eta1, pairs, g);
  sys.gamma = gamma;
  return sys;
}

QuadraticSystem to_quadratic(const ReducedSystem& sys) {
  const int N = sys.N, n = 2 * N;
  QuadraticSystem q;
  q.N = n;
  q.K = Tensor3R(n, n, n);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int l = 0; l < N; ++l) {
        q.K.at(i, j, l) = sys.Gppp.at(i, j, l);
        q.K.at(i, N + j, N + l) = sys.Gmmp.at(i, j, l);
        q.K.at(N + i, j, N + l) = sys.Gpmm.at(i, j, l);
      }
  q.M = sys.M;
  q.g = sys.f;
  return q;
}

}  // namespace marangoni

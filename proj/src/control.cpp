#include "marangoni/control.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace marangoni {

namespace {

// P_n(t) and P_n'(t) by the joint recurrence (no 1-t^2 division, stable at |t| -> 1)
void legendre_pair(int n, double t, double& p, double& dp) {
  double p0 = 1.0, d0 = 0.0;
  if (n == 0) {
    p = p0;
    dp = d0;
    return;
  }
  double p1 = t, d1 = 1.0;
  for (int m = 2; m <= n; ++m) {
    double pm = ((2 * m - 1) * t * p1 - (m - 1) * p0) / m;
    double dm = ((2 * m - 1) * (p1 + t * d1) - (m - 1) * d0) / m;
    p0 = p1;
    d0 = d1;
    p1 = pm;
    d1 = dm;
  }
  p = p1;
  dp = d1;
}

double bump(double t) { return std::abs(t) < 1.0 ? std::exp(-1.0 / (1.0 - t * t)) : 0.0; }

double bump_d(double t) {
  if (std::abs(t) >= 1.0) return 0.0;
  double s = 1.0 - t * t;
  return bump(t) * (-2.0 * t / (s * s));
}

}  // namespace

double BumpBasis::value(int n, double y) const {
  double t = 2.0 * (y - lo) / (hi - lo) - 1.0;
  if (std::abs(t) >= 1.0) return 0.0;
  double p, dp;
  legendre_pair(n, t, p, dp);
  return bump(t) * p;
}

double BumpBasis::deriv(int n, double y) const {
  double t = 2.0 * (y - lo) / (hi - lo) - 1.0;
  if (std::abs(t) >= 1.0) return 0.0;
  double p, dp;
  legendre_pair(n, t, p, dp);
  return (bump_d(t) * p + bump(t) * dp) * 2.0 / (hi - lo);
}

TrigField HeatSource2D::to_field() const {
  TrigField f;
  BumpBasis bb = basis;
  auto render = [&f, bb](int m, XParity p, const Vec& c) {
    f.add(m, p,
          [bb, c](double y) {
            double s = 0.0;
            for (int n = 0; n < c.size(); ++n) s += c(n) * bb.value(n, y);
            return s;
          },
          [bb, c](double y) {
            double s = 0.0;
            for (int n = 0; n < c.size(); ++n) s += c(n) * bb.deriv(n, y);
            return s;
          });
  };
  for (const auto& [m, c] : cosc) render(m, XParity::Cos, c);
  for (const auto& [m, c] : sinc) render(m, XParity::Sin, c);
  return f;
}

Vec svd_least_squares(const Mat& A, const Vec& b, double rank_floor, int* rank_out) {
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  double thr = rank_floor * std::max(1.0, sv.size() ? sv(0) : 0.0);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > thr) rank++;
  if (rank_out) *rank_out = rank;
  Vec y = svd.matrixU().transpose() * b;
  Vec z = Vec::Zero(sv.size());
  for (int i = 0; i < rank; ++i) z(i) = y(i) / sv(i);
  return svd.matrixV() * z;
}

// ---------------------------------------------------------------------------

namespace {

struct ChannelSystem {
  std::vector<int> harmonics;          // unknown channels, sorted
  Mat A;                               // rows x (harmonics * basisSize)
  Vec b;
  int col(int m, int n, int basisSize) const {
    auto it = std::lower_bound(harmonics.begin(), harmonics.end(), m);
    return int(it - harmonics.begin()) * basisSize + n;
  }
};

}  // namespace

HeatSource2D solve_control(const ControlTarget& target, const std::vector<ModePair>& pairs,
                           const HeatProfile& prof, int basisSize) {
  const int N = (int)pairs.size();
  require(target.Tpp.rows() == N && target.Tmm.rows() == N && target.Tpm.rows() == N &&
              target.Tmp.rows() == N,
          ErrorCode::PreconditionError, "target block size");
  require(basisSize >= 1, ErrorCode::PreconditionError, "basisSize");
  const auto& g = prof.grid();
  const double h = prof.params().h, d1 = prof.delta1();
  double margin = (h - d1) / 20.0;
  BumpBasis basis{d1 + margin, h - margin, basisSize};

  // per-parity channel systems: cos rows are (si,sj) in {(+,+),(-,-)},
  // sin rows are {(+,-),(-,+)}
  auto build = [&](XParity par, const std::vector<std::pair<int, int>>& signs,
                   const std::vector<const Mat*>& blocks) {
    ChannelSystem cs;
    std::set<int> hs;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        int ki = pairs[i].mode.k, kj = pairs[j].mode.k;
        hs.insert(ki + kj);
        int d = std::abs(ki - kj);
        if (par == XParity::Cos || d > 0) hs.insert(d);
      }
    cs.harmonics.assign(hs.begin(), hs.end());
    int rows = (int)signs.size() * N * N;
    cs.A = Mat::Zero(rows, (int)cs.harmonics.size() * basisSize);
    cs.b = Vec::Zero(rows);
    int r = 0;
    for (size_t s = 0; s < signs.size(); ++s) {
      auto [si, sj] = signs[s];
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j, ++r) {
          TrigField br = bracket(mode_psi(pairs[j].mode, sj), conj_temp(pairs[i].conj, si));
          for (int m : cs.harmonics) {
            YFun amp = br.channel(m, par);
            double xw = x_weight(m, par);
            if (xw == 0.0) continue;
            for (int n = 0; n < basisSize; ++n) {
              double v = xw * g.integrate([&](double y) { return amp(y) * basis.value(n, y); });
              cs.A(r, cs.col(m, n, basisSize)) = v;
            }
          }
          cs.b(r) = (*blocks[s])(i, j);
        }
    }
    return cs;
  };

  ChannelSystem cosSys =
      build(XParity::Cos, {{+1, +1}, {-1, -1}}, {&target.Tpp, &target.Tmm});
  ChannelSystem sinSys =
      build(XParity::Sin, {{+1, -1}, {-1, +1}}, {&target.Tpm, &target.Tmp});

  HeatSource2D src;
  src.basis = basis;
  auto solve_into = [&](const ChannelSystem& cs, std::map<int, Vec>& coef) {
    if (cs.A.rows() == 0) return;
    int rank = 0;
    Vec x = svd_least_squares(cs.A, cs.b, 1e-12, &rank);
    double resid = (cs.A * x - cs.b).lpNorm<Eigen::Infinity>();
    if (resid > 1e-9 * (1.0 + cs.b.lpNorm<Eigen::Infinity>()))
      fail(ErrorCode::RankDeficient,
           "control system unreachable: rank " + std::to_string(rank) + " of " +
               std::to_string(cs.A.rows()) + " constraints, residual " + std::to_string(resid));
    for (size_t hi = 0; hi < cs.harmonics.size(); ++hi) {
      Vec c = x.segment((int)hi * basisSize, basisSize);
      if (c.lpNorm<Eigen::Infinity>() > 0.0) coef[cs.harmonics[hi]] = c;
    }
  };
  solve_into(cosSys, src.cosc);
  solve_into(sinSys, src.sinc);
  return src;
}

HeatSource2D solve_forcing(const Vec& fplus, const Vec& fminus,
                           const std::vector<ModePair>& pairs, const HeatProfile& prof,
                           int basisSize, double delta0) {
  const int N = (int)pairs.size();
  require(fplus.size() == N && fminus.size() == N, ErrorCode::PreconditionError,
          "forcing target size");
  const auto& g = prof.grid();
  const double h = prof.params().h;
  if (delta0 <= 0.0) delta0 = h / 4.0;
  require(delta0 < h / 2.0, ErrorCode::PreconditionError, "delta0 not in (0, h/2)");
  double margin = (h - delta0) / 20.0;
  BumpBasis basis{delta0 + margin, h - margin, basisSize};

  HeatSource2D src;
  src.basis = basis;
  for (int i = 0; i < N; ++i) {
    int k = pairs[i].mode.k;
    YFun tt = pairs[i].conj.tt;
    Mat A(1, basisSize);
    for (int n = 0; n < basisSize; ++n)
      A(0, n) = M_PI * g.integrate([&](double y) { return tt(y) * basis.value(n, y); });
    for (int chan = 0; chan < 2; ++chan) {
      double tgt = chan == 0 ? fplus(i) : fminus(i);
      int rank = 0;
      Vec x = svd_least_squares(A, Vec::Constant(1, tgt), 1e-12, &rank);
      if (std::abs((A * x)(0) - tgt) > 1e-9 * (1.0 + std::abs(tgt)))
        fail(ErrorCode::RankDeficient, "forcing row unreachable at k=" + std::to_string(k));
      if (x.lpNorm<Eigen::Infinity>() > 0.0) (chan == 0 ? src.cosc : src.sinc)[k] = x;
    }
  }
  return src;
}

// ---------------------------------------------------------------------------

namespace {

bool sums_distinct(const std::vector<int>& ks) {
  std::set<int> sums;
  for (size_t i = 0; i < ks.size(); ++i)
    for (size_t j = i; j < ks.size(); ++j)
      if (!sums.insert(ks[i] + ks[j]).second) return false;
  return true;
}

}  // namespace

SidonSet sidon_set(int p) {
  require(p >= 1, ErrorCode::PreconditionError, "p >= 1");
  std::vector<int> seed{1, 7, 19};
  SidonSet s;
  s.p = p;
  for (int k : seed) {
    if ((int)s.ks.size() == p) break;
    s.ks.push_back(k);
  }
  while ((int)s.ks.size() < p) {
    int k = 3 * s.ks.back() + 1;  // smallest value > 3 k_last with k = 1 mod 3
    while (true) {
      if (k % 3 == 1) {
        s.ks.push_back(k);
        if (sums_distinct(s.ks)) break;
        s.ks.pop_back();
      }
      ++k;
    }
  }
  return s;
}

bool verify_sidon(const SidonSet& s) {
  if ((int)s.ks.size() != s.p) return false;
  for (size_t i = 0; i < s.ks.size(); ++i) {
    if (s.ks[i] % 3 != 1 || s.ks[i] <= 0) return false;
    if (i > 0 && s.ks[i] <= s.ks[i - 1]) return false;
  }
  return sums_distinct(s.ks);
}

PDecomposition check_p_decomposition(const Tensor3& Gppp, const std::vector<int>& ks,
                                     const SidonSet& sidon) {
  PDecomposition out;
  auto pos = [&ks](int k) {
    for (size_t r = 0; r < ks.size(); ++r)
      if (ks[r] == k) return (int)r;
    fail(ErrorCode::MismatchedBases, "mode list lacks wavenumber " + std::to_string(k));
    return -1;
  };
  for (int i = 0; i < sidon.p; ++i) {
    for (int j = i; j < sidon.p; ++j) {
      int r = pos(sidon.ks[i] + sidon.ks[j]);
      int a = pos(sidon.ks[i]), b = pos(sidon.ks[j]);
      double pivot = Gppp.at(r, a, b) + (a == b ? 0.0 : Gppp.at(r, b, a));
      if (std::abs(pivot) < 1e-10)
        fail(ErrorCode::PivotUnderflow,
             "pivot underflow at pair (" + std::to_string(sidon.ks[i]) + "," +
                 std::to_string(sidon.ks[j]) + ")");
      out.pivots.emplace_back(i, j, pivot);
      out.sum_rows.push_back(r);
      out.sum_ks.push_back(sidon.ks[i] + sidon.ks[j]);
    }
  }
  out.solvable = true;
  return out;
}

std::map<int, double> PDecomposition::solve(const Mat& b) const {
  std::map<int, double> u;
  for (size_t t = 0; t < pivots.size(); ++t) {
    auto [i, j, piv] = pivots[t];
    u[sum_ks[t]] = b(i, j) / piv;
  }
  return u;
}

}  // namespace marangoni

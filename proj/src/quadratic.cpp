#include "marangoni/quadratic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace marangoni {

namespace {

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

Vec from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), (Eigen::Index)v.size());
}

// sample grid 0, dt, 2dt, ..., final point exactly at T
std::vector<double> sample_times(double T, double dt) {
  require(dt > 0 && T > 0, ErrorCode::PreconditionError, "integrate needs T, dt > 0");
  std::vector<double> ts;
  for (double t = 0.0; t < T - 0.5 * dt; t += dt) ts.push_back(t);
  ts.push_back(T);
  return ts;
}

Trajectory collect(const OdeOutput& out) {
  Trajectory tr;
  tr.t = out.t;
  tr.x.reserve(out.y.size());
  for (const auto& y : out.y) tr.x.push_back(from_std(y));
  return tr;
}

}  // namespace

Vec Tensor3R::apply(const Vec& x, const Vec& y) const {
  require(x.size() == d1 && y.size() == d2, ErrorCode::PreconditionError, "tensor apply size");
  Vec out = Vec::Zero(d0);
  for (int i = 0; i < d0; ++i) {
    double s = 0.0;
    const double* row = a.data() + static_cast<size_t>(i) * d1 * d2;
    for (int j = 0; j < d1; ++j) {
      if (x[j] == 0.0) continue;
      double sj = 0.0;
      for (int l = 0; l < d2; ++l) sj += row[static_cast<size_t>(j) * d2 + l] * y[l];
      s += x[j] * sj;
    }
    out[i] = s;
  }
  return out;
}

Vec QuadraticSystem::evaluate(const Vec& X) const {
  require(X.size() == N && K.d0 == N && K.d1 == N && K.d2 == N && M.rows() == N && g.size() == N,
          ErrorCode::PreconditionError, "quadratic system dimension mismatch");
  return K.apply(X) + M * X + g;
}

Vec TargetField::evaluate(const Vec& Y) const {
  require(Y.size() == p, ErrorCode::PreconditionError, "target field dimension mismatch");
  return D.apply(Y) + R * Y + f;
}

double TargetField::inward_margin(int samples, unsigned seed, Vec* worst_q) const {
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double worst = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    Vec q(p);
    double nrm = 0.0;
    do {
      for (int i = 0; i < p; ++i) q[i] = gauss(rng);
      nrm = q.norm();
    } while (nrm < 1e-12);
    q *= R0 / nrm;
    const double val = evaluate(q).dot(q);
    if (val > worst) {
      worst = val;
      if (worst_q) *worst_q = q;
    }
  }
  return worst;
}

Vec SlowFastSplit::rhs(const Vec& Y, const Vec& Z) const {
  Vec out(N);
  out.head(p) = K1.apply(Y) + K2.apply(Y, Z) + K3.apply(Z) + R * Y + (T * Z) / xi + f;
  out.tail(N - p) = K1t.apply(Y) + K2t.apply(Y, Z) + K3t.apply(Z) - Z / xi;
  return out;
}

Vec SlowFastSplit::rhs(const Vec& X) const {
  require(X.size() == N, ErrorCode::PreconditionError, "split rhs dimension mismatch");
  return rhs(X.head(p), X.tail(N - p));
}

Vec SlowFastSplit::reduced_field(const Vec& Y) const {
  return K1.apply(Y) + T * K1t.apply(Y) + R * Y + f;
}

Vec SlowFastSplit::manifold_Z(const Vec& Y) const { return xi * K1t.apply(Y); }

QuadraticSystem SlowFastSplit::to_system() const {
  const int q = N - p;
  QuadraticSystem sys;
  sys.N = N;
  sys.K = Tensor3R(N, N, N);
  sys.M = Mat::Zero(N, N);
  sys.g = Vec::Zero(N);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j)
      for (int l = 0; l < p; ++l) sys.K.at(i, j, l) = K1.at(i, j, l);
    for (int j = 0; j < p; ++j)
      for (int l = 0; l < q; ++l) sys.K.at(i, j, p + l) = K2.at(i, j, l);
    for (int j = 0; j < q; ++j)
      for (int l = 0; l < q; ++l) sys.K.at(i, p + j, p + l) = K3.at(i, j, l);
    for (int j = 0; j < p; ++j) sys.M(i, j) = R(i, j);
    for (int j = 0; j < q; ++j) sys.M(i, p + j) = T(i, j) / xi;
    sys.g[i] = f[i];
  }
  for (int k = 0; k < q; ++k) {
    for (int j = 0; j < p; ++j)
      for (int l = 0; l < p; ++l) sys.K.at(p + k, j, l) = K1t.at(k, j, l);
    for (int j = 0; j < p; ++j)
      for (int l = 0; l < q; ++l) sys.K.at(p + k, j, p + l) = K2t.at(k, j, l);
    for (int j = 0; j < q; ++j)
      for (int l = 0; l < q; ++l) sys.K.at(p + k, p + j, p + l) = K3t.at(k, j, l);
    sys.M(p + k, p + k) = -1.0 / xi;
  }
  return sys;
}

SlowFastSplit split_system(const QuadraticSystem& sys, int p, double xi) {
  const int N = sys.N, q = N - p;
  require(p > 0 && p < N && xi > 0, ErrorCode::PreconditionError, "split_system needs 0 < p < N");
  const double mtol = 1e-9 * std::max(1.0, 1.0 / xi);
  for (int k = 0; k < q; ++k) {
    for (int j = 0; j < p; ++j)
      require(std::abs(sys.M(p + k, j)) <= mtol, ErrorCode::PreconditionError,
              "fast rows must carry no linear slow coupling");
    for (int j = 0; j < q; ++j) {
      double want = (j == k) ? -1.0 / xi : 0.0;
      require(std::abs(sys.M(p + k, p + j) - want) <= mtol, ErrorCode::PreconditionError,
              "fast linear block must equal -xi^-1 I");
    }
    require(std::abs(sys.g[p + k]) <= 1e-12 * (1.0 + sys.g.lpNorm<Eigen::Infinity>()),
            ErrorCode::PreconditionError, "fast rows must carry no forcing");
  }
  SlowFastSplit sp;
  sp.p = p;
  sp.N = N;
  sp.xi = xi;
  for (int i = 0; i < p; ++i) sp.Ip.push_back(i);
  for (int k = 0; k < q; ++k) sp.Jp.push_back(p + k);
  sp.K1 = Tensor3R(p, p, p);
  sp.K2 = Tensor3R(p, p, q);
  sp.K3 = Tensor3R(p, q, q);
  sp.K1t = Tensor3R(q, p, p);
  sp.K2t = Tensor3R(q, p, q);
  sp.K3t = Tensor3R(q, q, q);
  auto fill = [&](Tensor3R& b1, Tensor3R& b2, Tensor3R& b3, int row, int r) {
    for (int j = 0; j < p; ++j)
      for (int l = 0; l < p; ++l) b1.at(r, j, l) = sys.K.at(row, j, l);
    // both ambient orderings of a mixed monomial fold into the (Y, Z) slot
    for (int j = 0; j < p; ++j)
      for (int l = 0; l < q; ++l)
        b2.at(r, j, l) = sys.K.at(row, j, p + l) + sys.K.at(row, p + l, j);
    for (int j = 0; j < q; ++j)
      for (int l = 0; l < q; ++l) b3.at(r, j, l) = sys.K.at(row, p + j, p + l);
  };
  for (int i = 0; i < p; ++i) fill(sp.K1, sp.K2, sp.K3, i, i);
  for (int k = 0; k < q; ++k) fill(sp.K1t, sp.K2t, sp.K3t, p + k, k);
  sp.R = sys.M.topLeftCorner(p, p);
  sp.T = xi * sys.M.topRightCorner(p, q);
  sp.f = sys.g.head(p);
  return sp;
}

SlowFastSplit build_realizer(const TargetField& target, const Tensor3R& K, double xi) {
  const int p = target.p, N = K.d0, q = N - p;
  require(K.d0 == K.d1 && K.d1 == K.d2, ErrorCode::PreconditionError, "realizer needs a cubic K");
  require(xi > 0, ErrorCode::PreconditionError, "realizer needs xi > 0");
  require(2 * (p * p + p) > N && p * p + p <= N, ErrorCode::PreconditionError,
          "realizer needs N/2 < p^2 + p <= N");
  require(target.D.d0 == p && target.D.d1 == p && target.D.d2 == p && target.R.rows() == p &&
              target.R.cols() == p && target.f.size() == p,
          ErrorCode::PreconditionError, "target dimension mismatch");

  // symmetrized monomial basis Y_j Y_l, j <= l
  const int nmono = p * (p + 1) / 2;
  Mat A(q, nmono);
  for (int k = 0; k < q; ++k) {
    int m = 0;
    for (int j = 0; j < p; ++j)
      for (int l = j; l < p; ++l, ++m)
        A(k, m) = K.at(p + k, j, l) + (j < l ? K.at(p + k, l, j) : 0.0);
  }
  Eigen::JacobiSVD<Mat> svd(A.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-12);

  Mat T(p, q);
  for (int i = 0; i < p; ++i) {
    Vec rhs(nmono);
    int m = 0;
    for (int j = 0; j < p; ++j)
      for (int l = j; l < p; ++l, ++m) {
        double d = target.D.at(i, j, l) + (j < l ? target.D.at(i, l, j) : 0.0);
        double k1 = K.at(i, j, l) + (j < l ? K.at(i, l, j) : 0.0);
        rhs[m] = d - k1;
      }
    Vec t = svd.solve(rhs);
    double resid = (A.transpose() * t - rhs).lpNorm<Eigen::Infinity>();
    if (resid > 1e-9 * (1.0 + rhs.lpNorm<Eigen::Infinity>()))
      fail(ErrorCode::DecompositionFailed,
           "slow row " + std::to_string(i) + " not representable, residual " +
               std::to_string(resid));
    T.row(i) = t.transpose();
  }

  QuadraticSystem shell;
  shell.N = N;
  shell.K = K;
  shell.M = Mat::Zero(N, N);
  shell.g = Vec::Zero(N);
  shell.M.topLeftCorner(p, p) = target.R;
  shell.M.topRightCorner(p, q) = T / xi;
  shell.M.bottomRightCorner(q, q) = -Mat::Identity(q, q) / xi;
  shell.g.head(p) = target.f;
  SlowFastSplit sp = split_system(shell, p, xi);
  sp.R0 = target.R0;
  return sp;
}

double slow_manifold_residual(const SlowFastSplit& split, const Vec& Y0, double settle_time) {
  require(Y0.size() == split.p, ErrorCode::PreconditionError, "residual Y dimension mismatch");
  require(Y0.norm() <= split.R0 * (1.0 + 1e-12), ErrorCode::PreconditionError,
          "residual start outside the ball R0");
  double settle = settle_time;
  if (settle <= 0)
    settle = 10.0 * split.xi * std::log(1.0 / std::min(split.xi, 0.99));
  Vec X0(split.N);
  X0.head(split.p) = Y0;
  X0.tail(split.N - split.p) = split.manifold_Z(Y0);
  Trajectory tr = integrate(split, X0, settle, settle / 200.0);
  for (size_t s = 0; s < tr.x.size(); ++s)
    if (tr.x[s].head(split.p).norm() > 2.0 * split.R0)
      fail(ErrorCode::Blowup, "trajectory left the ball 2 R0 at t = " + std::to_string(tr.t[s]));
  const Vec& last = tr.x.back();
  Vec Y = last.head(split.p), Z = last.tail(split.N - split.p);
  return (Z / split.xi - split.K1t.apply(Y)).norm();
}

Trajectory integrate(const QuadraticSystem& sys, const Vec& X0, double T, double dt) {
  require(X0.size() == sys.N, ErrorCode::PreconditionError, "integrate dimension mismatch");
  auto f = [&sys](double, const std::vector<double>& y, std::vector<double>& dy) {
    Vec v = sys.evaluate(from_std(y));
    std::copy(v.data(), v.data() + v.size(), dy.begin());
  };
  return collect(rk45(f, 0.0, T, to_std(X0), sample_times(T, dt)));
}

Trajectory integrate(const SlowFastSplit& split, const Vec& X0, double T, double dt) {
  require(X0.size() == split.N, ErrorCode::PreconditionError, "integrate dimension mismatch");
  const int p = split.p, q = split.N - p;
  std::vector<double> ts = sample_times(T, dt);
  if (split.xi > 1e-3) {
    auto f = [&split](double, const std::vector<double>& y, std::vector<double>& dy) {
      Vec v = split.rhs(from_std(y));
      std::copy(v.data(), v.data() + v.size(), dy.begin());
    };
    return collect(rk45(f, 0.0, T, to_std(X0), ts));
  }
  // stiff path: -xi^-1 Z implicit, everything else explicit two-step
  std::vector<double> a(split.N, 0.0);
  for (int k = 0; k < q; ++k) a[p + k] = -1.0 / split.xi;
  auto g = [&split, p, q](double, const std::vector<double>& y, std::vector<double>& dy) {
    Vec X = from_std(y);
    Vec Y = X.head(p), Z = X.tail(q);
    Vec v(split.N);
    v.head(p) = split.K1.apply(Y) + split.K2.apply(Y, Z) + split.K3.apply(Z) + split.R * Y +
                (split.T * Z) / split.xi + split.f;
    v.tail(q) = split.K1t.apply(Y) + split.K2t.apply(Y, Z) + split.K3t.apply(Z);
    std::copy(v.data(), v.data() + v.size(), dy.begin());
  };
  double h = std::min(dt, 2e-4);
  long nsub = std::lround(std::ceil(T / h - 1e-9));
  h = T / (double)nsub;
  return collect(imex_theta(g, a, 0.0, T, to_std(X0), h, ts));
}

}  // namespace marangoni

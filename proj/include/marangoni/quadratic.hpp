#pragma once

// Generic quadratic ODE systems dX/dt = K(X) + M X + g, their fast-slow
// splitting, slow-manifold reduction, and realization of prescribed quadratic
// fields on the slow block by choice of the coupling matrix T.

#include <Eigen/Dense>
#include <vector>

#include "marangoni/errors.hpp"
#include "marangoni/ode.hpp"

namespace marangoni {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Rank-3 tensor with independent dimensions, flat row-major storage.
struct Tensor3R {
  int d0 = 0, d1 = 0, d2 = 0;
  std::vector<double> a;

  Tensor3R() = default;
  Tensor3R(int n0, int n1, int n2)
      : d0(n0), d1(n1), d2(n2), a(static_cast<size_t>(n0) * n1 * n2, 0.0) {}

  double& at(int i, int j, int l) { return a[(static_cast<size_t>(i) * d1 + j) * d2 + l]; }
  double at(int i, int j, int l) const { return a[(static_cast<size_t>(i) * d1 + j) * d2 + l]; }

  // contraction out_i = sum_{j,l} a_{ijl} x_j y_l
  Vec apply(const Vec& x, const Vec& y) const;
  Vec apply(const Vec& x) const { return apply(x, x); }
};

// dX/dt = K(X) + M X + g with K(X)_i = sum_{j,l} K_{ijl} X_j X_l.
struct QuadraticSystem {
  int N = 0;
  Tensor3R K;  // N x N x N
  Mat M;       // N x N
  Vec g;       // N

  Vec evaluate(const Vec& X) const;
};

// Prescribed field F(Y) = D(Y) + R Y + f on the ball |Y| <= R0.
struct TargetField {
  int p = 0;
  Tensor3R D;  // p x p x p
  Mat R;       // p x p
  Vec f;       // p
  double R0 = 1.0;

  Vec evaluate(const Vec& Y) const;
  // max of F(q).q over a fixed pseudo-random sample of |q| = R0; strictly
  // negative means the field points inward everywhere on the sample
  double inward_margin(int samples = 64, unsigned seed = 1u, Vec* worst_q = nullptr) const;
};

// Fast-slow form
//   dY/dt = K1(Y) + K2(Y,Z) + K3(Z) + R Y + xi^-1 T Z + f
//   dZ/dt = K1t(Y) + K2t(Y,Z) + K3t(Z) - xi^-1 Z
// with slow coordinates Y = X[Ip] and fast Z = X[Jp]. The fast linear part is
// exactly -xi^-1 times the identity; the fast rows carry no linear slow
// coupling and no constant forcing. Mixed blocks K2/K2t keep Y in the first
// slot and Z in the second; both orderings of the ambient tensor fold there.
struct SlowFastSplit {
  int p = 0, N = 0;
  std::vector<int> Ip, Jp;  // ambient indices of the slow / fast coordinates
  Tensor3R K1, K2, K3;      // slow rows: p x p x p, p x p x (N-p), p x (N-p) x (N-p)
  Tensor3R K1t, K2t, K3t;   // fast rows, same column layout with d0 = N-p
  Mat R;                    // p x p
  Mat T;                    // p x (N-p); the stiff coupling is P = xi^-1 T
  Vec f;                    // p
  double xi = 1e-3;
  double R0 = 1.0;

  Vec rhs(const Vec& Y, const Vec& Z) const;  // stacked (dY, dZ)
  Vec rhs(const Vec& X) const;                // X = [Y; Z]
  // leading-order field on the slow manifold: K1(Y) + T K1t(Y) + R Y + f
  Vec reduced_field(const Vec& Y) const;
  // zeroth-order manifold graph Z = xi K1t(Y)
  Vec manifold_Z(const Vec& Y) const;
  // ambient quadratic system in [Y; Z] coordinates
  QuadraticSystem to_system() const;
};

// Extract the fast-slow blocks of an ambient system under the canonical
// partition (slow = first p coordinates), verifying the structural
// constraints on the fast rows: M fast-fast block -xi^-1 I, fast-slow block
// and fast forcing zero. PreconditionError on violation.
SlowFastSplit split_system(const QuadraticSystem& sys, int p, double xi);

// Choose T so the slow-manifold reduced field K1(Y) + T K1t(Y) + R Y + f
// matches the target D(Y) + R Y + f: solves T K1t = D - K1 rowwise over the
// symmetrized monomial basis by minimum-norm least squares. Requires
// N/2 < p^2 + p <= N; DecompositionFailed when a row is not representable.
SlowFastSplit build_realizer(const TargetField& target, const Tensor3R& K, double xi);

// Integrate the full system from Z = xi K1t(Y0) until fast transients settle
// (default 10 xi log(1/xi)), return ||Z/xi - K1t(Y)|| at the final state.
// Blowup if |Y| leaves the ball 2 R0 along the way.
double slow_manifold_residual(const SlowFastSplit& split, const Vec& Y0,
                              double settle_time = -1.0);

// Time series sampled at spacing dt with the final sample exactly at T.
struct Trajectory {
  std::vector<double> t;
  std::vector<Vec> x;
};

// Adaptive integration with dense output at spacing dt. The split overload
// switches to the implicit-explicit path when xi <= 1e-3, subdividing dt
// internally; the -xi^-1 Z term is then treated implicitly.
Trajectory integrate(const QuadraticSystem& sys, const Vec& X0, double T, double dt);
Trajectory integrate(const SlowFastSplit& split, const Vec& X0, double T, double dt);

}  // namespace marangoni

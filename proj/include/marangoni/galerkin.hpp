#pragma once

#include <Eigen/Dense>

#include "marangoni/quadratic.hpp"
#include "marangoni/spectral.hpp"
#include "marangoni/trig.hpp"

namespace marangoni {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct Tensor3 {
  int n = 0;
  std::vector<double> a;
  Tensor3() = default;
  explicit Tensor3(int n_) : n(n_), a(size_t(n_) * n_ * n_, 0.0) {}
  double& at(int i, int j, int l) { return a[(size_t(i) * n + j) * n + l]; }
  double at(int i, int j, int l) const { return a[(size_t(i) * n + j) * n + l]; }
};

// Real fields of the slow modes and their conjugates, sign = +1 / -1:
//   e+ = (v sin kx, Th cos kx), psi+ = -k P sin kx
//   e- = (-v cos kx, Th sin kx), psi- = +k P cos kx
// and the same sin/cos pattern for (oz, tt).
TrigField mode_omega(const Mode& m, int sign);
TrigField mode_temp(const Mode& m, int sign);
TrigField mode_psi(const Mode& m, int sign);
TrigField conj_omega(const ConjMode& c, int sign);
TrigField conj_temp(const ConjMode& c, int sign);

// Quadratic blocks of the reduced system:
//   dX_i^+ <- sum_jl ppp(i,j,l) X_j^+ X_l^+ + mmp(i,j,l) X_j^- X_l^-
//   dX_i^- <- sum_jl pmm(i,j,l) X_j^+ X_l^-
// ppp/mmp are unsymmetrized (both (j,l) orders appear in the contraction);
// pmm carries both bracket orders of the mixed product. Entries are
//   -<{psi_j, w_l}, ttheta_i> - <{psi_j, omega_l}, z_i>,
// the z term (O(1/nu)) dropped when include_oz is false (asymptotic form).
struct GTensors {
  Tensor3 ppp, mmp, pmm;
};
GTensors compute_G(const std::vector<ModePair>& pairs, const CompositeGrid& g,
                   bool include_oz = true);

// Linear matrix of the control source: block M^{s t}_{ij} = <{psi_j^t, ttheta_i^s}, u1>,
// packed 2N x 2N with [plus; minus] ordering. u1 must vanish on [0, delta1].
Mat compute_M(const TrigField& u1, const std::vector<ModePair>& pairs,
              const CompositeGrid& g, double delta1);

// Forcing projections f_i^± = <eta1, ttheta_i^±>, packed [plus; minus].
// eta1 must have zero mean over the strip.
Vec compute_f(const TrigField& eta1, const std::vector<ModePair>& pairs,
              const CompositeGrid& g);

// (2N+1) x (2N+1) pairing matrix of (e0, e_1..N^+, e_1..N^-) against the conjugates;
// identity after biorthogonalize.
Mat gram_matrix(const std::vector<ModePair>& pairs, double h, const CompositeGrid& g);

struct ReducedSystem {
  int N = 0;
  std::vector<int> ks;  // wavenumber of each mode slot
  Tensor3 Gppp, Gmmp, Gpmm;
  Mat M;  // 2N x 2N
  Vec f;  // 2N
  double gamma = 0.0;

  // rhs in slow time tau = gamma t; X packed [X^+ block, X^- block]
  Vec evaluate(const Vec& X) const;
};

ReducedSystem assemble_reduced(const HeatProfile& prof, const std::vector<ModePair>& pairs,
                               const TrigField& u1, const TrigField& eta1, double gamma);

// Repack the parity blocks into one ambient quadratic system on [X^+, X^-]:
// plus rows carry Gppp and Gmmp, minus rows carry Gpmm.
QuadraticSystem to_quadratic(const ReducedSystem& sys);

}  // namespace marangoni

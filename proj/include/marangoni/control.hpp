#pragma once

#include <map>
#include <tuple>

#include "marangoni/galerkin.hpp"

namespace marangoni {

// ---------------------------------------------------------------------------
// Targets, index sets, sources
// ---------------------------------------------------------------------------

struct ControlTarget {
  Mat Tpp, Tmm, Tpm, Tmp;  // N x N blocks
  Vec fplus, fminus;       // N (used by solve_forcing)
};

struct SidonSet {
  int p = 0;
  std::vector<int> ks;  // strictly increasing, k_i = 1 mod 3, pairwise sums distinct
};

// Smooth y-basis: C-infinity bump window times Legendre polynomials, mapped onto
// (lo, hi); identically zero outside, so support constraints hold exactly.
struct BumpBasis {
  double lo = 0.0, hi = 0.0;
  int size = 0;
  double value(int n, double y) const;
  double deriv(int n, double y) const;
};

// Heat source in Fourier-x representation: per-harmonic cosine/sine coefficient
// vectors over a fixed BumpBasis.
struct HeatSource2D {
  BumpBasis basis;
  std::map<int, Vec> cosc, sinc;
  TrigField to_field() const;
  bool empty() const { return cosc.empty() && sinc.empty(); }
};

// ---------------------------------------------------------------------------
// Inverse problems
// ---------------------------------------------------------------------------

// Builds u1 with compute_M(u1) = target blocks. Per x-parity the constraints decouple:
// cosine channels carry T^{++}/T^{--}, sine channels T^{+-}/T^{-+}; each channel system
// is solved least-squares (truncated SVD, rank floor 1e-12, minimum norm).
// The y-basis window is (delta1 + margin, h - margin), margin = (h - delta1)/20.
HeatSource2D solve_control(const ControlTarget& target, const std::vector<ModePair>& pairs,
                           const HeatProfile& prof, int basisSize);

// Builds eta1 with compute_f(eta1) = (fplus, fminus); support window (delta0, h),
// delta0 in (0, h/2), default h/4. No zero harmonic is used, so the strip mean
// vanishes identically.
HeatSource2D solve_forcing(const Vec& fplus, const Vec& fminus,
                           const std::vector<ModePair>& pairs, const HeatProfile& prof,
                           int basisSize, double delta0 = -1.0);

// ---------------------------------------------------------------------------
// Sidon sets and the p-decomposition condition
// ---------------------------------------------------------------------------

// Deterministic construction seeded {1, 7, 19}, then greedy: smallest k > 3 k_last with
// k = 1 mod 3 whose addition keeps all pairwise sums distinct.
SidonSet sidon_set(int p);

// Exhaustive pairwise-sum distinctness + residue check.
bool verify_sidon(const SidonSet& s);

struct PDecomposition {
  bool solvable = false;
  // (i, j, pivot) over sidon pairs i <= j; pivot is the coefficient of X_i X_j in the
  // row of the sum wavenumber k_i + k_j
  std::vector<std::tuple<int, int, double>> pivots;
  std::vector<int> sum_rows;  // mode-list position of each pair's sum wavenumber
  std::vector<int> sum_ks;    // the sum wavenumber itself

  // u keyed by sum wavenumber: u_{k_i+k_j} = b(i,j) / pivot(i,j); b is p x p,
  // upper triangle read
  std::map<int, double> solve(const Mat& b) const;
};

// Gppp is the plus-row quadratic block over a mode list with wavenumbers ks
// (positions, not wavenumbers, index the tensor). Throws PivotUnderflow when a
// pivot magnitude is below 1e-10, MismatchedBases when a sum wavenumber is not
// in the list.
PDecomposition check_p_decomposition(const Tensor3& Gppp, const std::vector<int>& ks,
                                     const SidonSet& sidon);

// Truncated-SVD minimum-norm least squares (shared by the inverse problems).
Vec svd_least_squares(const Mat& A, const Vec& b, double rank_floor, int* rank_out = nullptr);

}  // namespace marangoni

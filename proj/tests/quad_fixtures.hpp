#pragma once

// Shared quadratic-system fixtures.
//
// The template tensor is the plus-block Galerkin tensor over a fixed untuned
// profile on wavenumbers [1, 7, 2, 8, 14, 3], scaled to unit max entry. The
// slow pair {1, 7} has all pairwise sums distinct, so wavenumber selection
// empties the slow-slow block (no pair from {1,7} adds or subtracts to 1 or 7)
// and puts independent pivots in the rows of 2, 8 and 14; row 3 is inert under
// slow-slow products. Any 2-dimensional quadratic target is therefore
// realizable on it, and the window N/2 < p^2+p <= N holds with N = 6.

#include <algorithm>
#include <cmath>
#include <vector>

#include "marangoni/galerkin.hpp"
#include "marangoni/quadratic.hpp"
#include "marangoni/spectral.hpp"

namespace fixtures {

inline const std::vector<int>& template_ks() {
  static const std::vector<int> ks{1, 7, 2, 8, 14, 3};
  return ks;
}

inline const marangoni::HeatProfile& template_profile() {
  static const marangoni::HeatProfile prof = [] {
    marangoni::ProfileParams p;
    p.N = 1;
    p.d = {0.0};
    p.mu = 1.0;  // untuned; the tensor only needs to be generic
    p.kappa = 0.02;
    p.z0 = 0.1;
    p.h = 10.0;
    p.nu = 100.0;
    return marangoni::HeatProfile(p);
  }();
  return prof;
}

// Biorthogonal pairs at the template wavenumbers (not a contiguous 1..N range,
// so the pairing normalization is redone here; it is linear in Atilde).
inline const std::vector<marangoni::ModePair>& template_pairs() {
  using namespace marangoni;
  static const std::vector<ModePair> pairs = [] {
    const HeatProfile& prof = template_profile();
    const CompositeGrid& g = prof.grid();
    std::vector<ModePair> out;
    for (int k : template_ks()) {
      ModePair pr;
      pr.mode = build_mode(prof, k);
      ConjMode raw = build_conjugate_mode(prof, k, 1.0);
      pr.gram =
          M_PI * (g.integrate([&](double y) { return pr.mode.v(y) * raw.oz(y); }) +
                  g.integrate([&](double y) { return pr.mode.th(y) * raw.tt(y); }));
      require(std::abs(pr.gram) > 1e-12, ErrorCode::DegeneratePairing, "template pairing");
      pr.conj = build_conjugate_mode(prof, k, 1.0 / pr.gram);
      out.push_back(std::move(pr));
    }
    return out;
  }();
  return pairs;
}

inline const marangoni::GTensors& template_G() {
  using namespace marangoni;
  static const GTensors G = compute_G(template_pairs(), template_profile().grid());
  return G;
}

// 6 x 6 x 6 plus-block tensor at unit max scale.
inline const marangoni::Tensor3R& template_K() {
  using namespace marangoni;
  static const Tensor3R K = [] {
    const Tensor3& ppp = template_G().ppp;
    double s = 0.0;
    for (double v : ppp.a) s = std::max(s, std::abs(v));
    Tensor3R out(ppp.n, ppp.n, ppp.n);
    for (int i = 0; i < ppp.n; ++i)
      for (int j = 0; j < ppp.n; ++j)
        for (int l = 0; l < ppp.n; ++l) out.at(i, j, l) = ppp.at(i, j, l) / s;
    return out;
  }();
  return K;
}

inline marangoni::TargetField saddle_target() {
  marangoni::TargetField t;
  t.p = 2;
  t.D = marangoni::Tensor3R(2, 2, 2);
  t.R = marangoni::Mat::Zero(2, 2);
  t.R(0, 0) = 1.0;
  t.R(1, 1) = -1.0;
  t.f = marangoni::Vec::Zero(2);
  t.R0 = 1.0;
  return t;
}

inline marangoni::TargetField attracting_target() {
  marangoni::TargetField t;
  t.p = 2;
  t.D = marangoni::Tensor3R(2, 2, 2);
  t.D.at(0, 0, 1) = 0.2;
  t.D.at(1, 0, 0) = -0.15;
  t.R = -marangoni::Mat::Identity(2, 2);
  t.f = marangoni::Vec(2);
  t.f << 0.05, -0.03;
  t.R0 = 1.0;
  return t;
}

inline marangoni::QuadraticSystem as_system(const marangoni::TargetField& t) {
  marangoni::QuadraticSystem q;
  q.N = t.p;
  q.K = t.D;
  q.M = t.R;
  q.g = t.f;
  return q;
}

}  // namespace fixtures

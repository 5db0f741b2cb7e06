#pragma once

#include <vector>

#include "marangoni/numerics.hpp"

namespace marangoni {

// Fields on the strip written as finite sums  sum_m  f_m(y) cos(mx) + g_m(y) sin(mx).
// The x-algebra (products, brackets, pairings) is exact via product-to-sum identities;
// only y-integrals are numerical.

enum class XParity { Cos, Sin };

using YFun = std::function<double(double)>;

struct TrigTerm {
  int m = 0;
  XParity p = XParity::Cos;
  YFun f;   // amplitude
  YFun df;  // d/dy amplitude; empty when the term is terminal (no further brackets)
};

class TrigField {
public:
  TrigField() = default;

  // (0, Sin) terms are identically zero and dropped.
  TrigField& add(int m, XParity p, YFun f, YFun df = {});
  const std::vector<TrigTerm>& terms() const { return t_; }
  bool empty() const { return t_.empty(); }
  bool has_derivatives() const;

  TrigField operator+(const TrigField& o) const;
  TrigField scaled(double c) const;

  double eval(double x, double y) const;
  // summed amplitude of one (m, parity) channel; returns the zero function if absent
  YFun channel(int m, XParity p) const;
  // list of (m, parity) channels present
  std::vector<std::pair<int, XParity>> channels() const;

private:
  std::vector<TrigTerm> t_;
};

// Poisson bracket {a, b} = a_y b_x - a_x b_y. Requires df on every term of both
// operands (PreconditionError otherwise). Resulting terms are terminal (df empty).
TrigField bracket(const TrigField& a, const TrigField& b);

// L2 pairing over the strip: int_0^{2pi} int f g dy dx; x-integral exact, y by grid.
double inner(const TrigField& a, const TrigField& b, const CompositeGrid& g);

// x-channel weight: int_0^{2pi} of the squared carrier (2pi, pi, or 0 for (0,Sin)).
double x_weight(int m, XParity p);

}  // namespace marangoni

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "marangoni/numerics.hpp"

namespace marangoni {

// Two-point problems u'' - k^2 u = f on [0,h], k > 0, with
//   Neumann:   u'(0) = 0,  u'(h) = 0
//   Dirichlet: u(0)  = 0,  u(h)  = 0
//   Mixed:     u'(0) = c0, u(h)  = 0
// solved by the exact Green kernel evaluated through one-signed exponential
// cumulants, so no growing exponential is ever formed. The rhs is integrated
// panel by panel on a composite Gauss-Legendre grid; evaluation at arbitrary y
// re-integrates the partial panel, so accuracy is that of the panel rule for a
// panel-smooth rhs (machine precision in practice).
enum class BvpKind { Neumann, Dirichlet, Mixed };

class BvpSolution {
public:
  BvpSolution() = default;
  double value(double y) const;
  double deriv(double y) const;
  double k() const;
  const CompositeGrid& grid() const;

  struct Data;
  std::shared_ptr<const Data> data;
};

BvpSolution solve_bvp(const CompositeGrid& grid, double k, BvpKind kind,
                      std::function<double(double)> f, double c0 = 0.0);

// Uniform second-order finite-difference solve of the same problems (n intervals,
// returns values at the n+1 uniform points). Independent cross-check path.
std::vector<double> fd_solve_bvp(double h, double k, BvpKind kind,
                                 const std::function<double(double)>& f, int n, double c0 = 0.0);

}  // namespace marangoni

#include "marangoni/trig.hpp"

#include <cmath>

namespace marangoni {

TrigField& TrigField::add(int m, XParity p, YFun f, YFun df) {
  require(m >= 0, ErrorCode::PreconditionError, "negative harmonic");
  if (m == 0 && p == XParity::Sin) return *this;
  t_.push_back({m, p, std::move(f), std::move(df)});
  return *this;
}

bool TrigField::has_derivatives() const {
  for (const auto& t : t_)
    if (!t.df) return false;
  return true;
}

TrigField TrigField::operator+(const TrigField& o) const {
  TrigField r = *this;
  for (const auto& t : o.t_) r.t_.push_back(t);
  return r;
}

TrigField TrigField::scaled(double c) const {
  TrigField r;
  for (const auto& t : t_) {
    YFun f = t.f, df = t.df;
    r.t_.push_back({t.m, t.p,
                    [f, c](double y) { return c * f(y); },
                    df ? YFun([df, c](double y) { return c * df(y); }) : YFun{}});
  }
  return r;
}

double TrigField::eval(double x, double y) const {
  double s = 0.0;
  for (const auto& t : t_)
    s += t.f(y) * (t.p == XParity::Cos ? std::cos(t.m * x) : std::sin(t.m * x));
  return s;
}

YFun TrigField::channel(int m, XParity p) const {
  std::vector<YFun> parts;
  for (const auto& t : t_)
    if (t.m == m && t.p == p) parts.push_back(t.f);
  if (parts.empty()) return [](double) { return 0.0; };
  return [parts](double y) {
    double s = 0.0;
    for (const auto& f : parts) s += f(y);
    return s;
  };
}

std::vector<std::pair<int, XParity>> TrigField::channels() const {
  std::vector<std::pair<int, XParity>> out;
  for (const auto& t : t_) {
    bool seen = false;
    for (const auto& c : out)
      if (c.first == t.m && c.second == t.p) seen = true;
    if (!seen) out.push_back({t.m, t.p});
  }
  return out;
}

double x_weight(int m, XParity p) {
  if (m == 0) return p == XParity::Cos ? 2.0 * M_PI : 0.0;
  return M_PI;
}

namespace {

struct XFactor {
  int m;
  XParity p;
  double c;
};

// product-to-sum of two carriers; drops identically-zero (0, Sin) outputs
void fourier_mult(int m, XParity pm, int n, XParity pn, std::vector<XFactor>& out) {
  auto push = [&out](int mm, XParity pp, double cc) {
    if (mm == 0 && pp == XParity::Sin) return;
    if (cc != 0.0) out.push_back({mm, pp, cc});
  };
  if (pm == XParity::Cos && pn == XParity::Cos) {
    push(std::abs(m - n), XParity::Cos, 0.5);
    push(m + n, XParity::Cos, 0.5);
  } else if (pm == XParity::Sin && pn == XParity::Sin) {
    push(std::abs(m - n), XParity::Cos, 0.5);
    push(m + n, XParity::Cos, -0.5);
  } else if (pm == XParity::Sin && pn == XParity::Cos) {
    push(m + n, XParity::Sin, 0.5);
    if (m != n) push(std::abs(m - n), XParity::Sin, m > n ? 0.5 : -0.5);
  } else {  // cos * sin = sin * cos with roles swapped
    push(m + n, XParity::Sin, 0.5);
    if (m != n) push(std::abs(m - n), XParity::Sin, n > m ? 0.5 : -0.5);
  }
}

}  // namespace

TrigField bracket(const TrigField& a, const TrigField& b) {
  require(a.has_derivatives() && b.has_derivatives(), ErrorCode::PreconditionError,
          "bracket operand lacks y-derivatives");
  TrigField r;
  std::vector<XFactor> xs;
  for (const auto& ta : a.terms()) {
    for (const auto& tb : b.terms()) {
      // a_y b_x: x-derivative flips parity, factor +m (Sin source) or -m (Cos source)
      {
        double s = tb.p == XParity::Cos ? -double(tb.m) : double(tb.m);
        XParity q = tb.p == XParity::Cos ? XParity::Sin : XParity::Cos;
        xs.clear();
        fourier_mult(ta.m, ta.p, tb.m, q, xs);
        YFun fa = ta.df, fb = tb.f;
        for (const auto& x : xs) {
          double c = x.c * s;
          r.add(x.m, x.p, [fa, fb, c](double y) { return c * fa(y) * fb(y); });
        }
      }
      // -a_x b_y
      {
        double s = ta.p == XParity::Cos ? -double(ta.m) : double(ta.m);
        XParity q = ta.p == XParity::Cos ? XParity::Sin : XParity::Cos;
        xs.clear();
        fourier_mult(ta.m, q, tb.m, tb.p, xs);
        YFun fa = ta.f, fb = tb.df;
        for (const auto& x : xs) {
          double c = -x.c * s;
          r.add(x.m, x.p, [fa, fb, c](double y) { return c * fa(y) * fb(y); });
        }
      }
    }
  }
  return r;
}

double inner(const TrigField& a, const TrigField& b, const CompositeGrid& g) {
  double total = 0.0;
  for (const auto& ta : a.terms()) {
    for (const auto& tb : b.terms()) {
      if (ta.m != tb.m || ta.p != tb.p) continue;
      double xw = x_weight(ta.m, ta.p);
      if (xw == 0.0) continue;
      YFun fa = ta.f, fb = tb.f;
      total += xw * g.integrate([&fa, &fb](double y) { return fa(y) * fb(y); });
    }
  }
  return total;
}

}  // namespace marangoni

#include "poissonlab/functionals.hpp"

#include <atomic>
#include <cmath>
#include <iostream>

namespace plab {

double evaluate(const Functional& F, const Configuration& w) {
  const double v = F.eval(w);
  if (F.bound > 0.0 && std::abs(v) > F.bound * (1.0 + 1e-12))
    throw ContractError("Functional: value exceeds the declared bound");
  return v;
}

namespace {
std::atomic<int> g_difference_warnings{0};
}

double difference(const Functional& F, const Mark& u, double t, const Configuration& w) {
  try {
    return F.eval(add_mass(w, Point{u, t})) - F.eval(w);
  } catch (const std::exception& e) {
    if (g_difference_warnings.fetch_add(1) < 8)
      std::cerr << "[poissonlab] warning: difference evaluator failed (" << e.what()
                << "); using 0\n";
    return 0.0;
  }
}

std::vector<double> Cylindrical::pairings(const Configuration& w) const {
  std::vector<double> v(fs.size(), 0.0);
  for (std::size_t i = 0; i < fs.size(); ++i) v[i] = pairing(fs[i], w);
  return v;
}

Functional Cylindrical::as_functional() const {
  Functional F;
  const Cylindrical self = *this;
  F.eval = [self](const Configuration& w) { return self.h(self.pairings(w)); };
  F.bound = bound;
  // Dependence window: union of the mark supports.
  Box dep = fs.empty() ? Box{} : fs.front().support;
  for (const auto& f : fs)
    for (int i = 0; i < dep.dim; ++i) {
      dep.axes[i].lo = std::min(dep.axes[i].lo, f.support.axes[i].lo);
      dep.axes[i].hi = std::max(dep.axes[i].hi, f.support.axes[i].hi);
    }
  F.dep_marks = dep;
  F.fresh_diff = [self](const Mark& u, double t, const Configuration& w, double Fw) {
    std::vector<double> v = self.pairings(w);
    std::vector<double> shifted = v;
    for (std::size_t i = 0; i < self.fs.size(); ++i) shifted[i] += self.fs[i](u, t);
    (void)Fw;
    return self.h(shifted) - self.h(v);
  };
  return F;
}

double difference_closed_form(const Cylindrical& F, const Mark& u, double t,
                              std::span<const double> pairings) {
  std::vector<double> v(pairings.begin(), pairings.end());
  std::vector<double> shifted = v;
  for (std::size_t i = 0; i < F.fs.size(); ++i) shifted[i] += F.fs[i](u, t);
  return F.h(shifted) - F.h(v);
}

double smooth_clipped_square(double v, double a, double b) {
  const double x = std::abs(v);
  if (x <= a) return v * v;
  const double cap = a * a + 2.0 * a * (b - a) / 3.0;
  if (x >= b) return cap;
  // C^1 blend: the slope ramps from 2a at x=a down to 0 at x=b as 2a(1-s)^2.
  const double s = (x - a) / (b - a);
  return a * a + 2.0 * a * (b - a) * (s - s * s + s * s * s / 3.0);
}

MarkTimeFunction indicator_function(const Box& box, double amplitude) {
  MarkTimeFunction f;
  f.support = box;
  f.f = [box, amplitude](const Mark& u, double) { return box.contains(u) ? amplitude : 0.0; };
  return f;
}

MarkTimeFunction bump_function(const Box& box, double amplitude) {
  MarkTimeFunction f;
  f.support = box;
  f.f = [box, amplitude](const Mark& u, double) {
    double v = amplitude;
    for (int i = 0; i < box.dim; ++i) {
      const double c = 0.5 * (box.axes[i].lo + box.axes[i].hi);
      const double h = 0.5 * box.axes[i].length();
      const double s = (u[i] - c) / h;
      if (std::abs(s) >= 1.0) return 0.0;
      const double q = 1.0 - s * s;
      v *= q * q;
    }
    return v;
  };
  return f;
}

Cylindrical linear_functional(const MarkTimeFunction& f, double bound) {
  Cylindrical F;
  F.fs = {f};
  F.bound = bound;
  F.h = [](std::span<const double> v) { return v[0]; };
  return F;
}

Cylindrical quadratic_functional(const MarkTimeFunction& f, double clip_lo, double clip_hi) {
  Cylindrical F;
  F.fs = {f};
  F.bound = clip_lo * clip_lo + 2.0 * clip_lo * (clip_hi - clip_lo) / 3.0 + 1.0;
  F.h = [clip_lo, clip_hi](std::span<const double> v) {
    return smooth_clipped_square(v[0], clip_lo, clip_hi);
  };
  return F;
}

Cylindrical tanh_functional(const MarkTimeFunction& f) {
  Cylindrical F;
  F.fs = {f};
  F.bound = 1.0;
  F.h = [](std::span<const double> v) { return std::tanh(v[0]); };
  return F;
}

Functional count_functional(const Box& box, double c, double cap) {
  Functional F;
  F.bound = std::abs(c) * cap;
  F.dep_marks = box;
  F.eval = [box, c, cap](const Configuration& w) {
    double n = 0.0;
    for (const Point& p : w.points())
      if (box.contains(p.u)) n += 1.0;
    return c * std::min(n, cap);
  };
  F.fresh_diff = [box, c, cap](const Mark& u, double, const Configuration&, double Fw) {
    if (!box.contains(u)) return 0.0;
    const double n = Fw / c;
    return n < cap ? c : 0.0;
  };
  return F;
}

}  // namespace plab

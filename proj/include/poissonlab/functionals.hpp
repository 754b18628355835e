#pragma once

#include <functional>
#include <span>
#include <vector>

#include "poissonlab/configuration.hpp"

namespace plab {

// A bounded functional on configuration space with a declared sup-norm bound
// and a declared dependence window (mark box; time is always [0,1]).
struct Functional {
  std::function<double(const Configuration&)> eval;
  double bound = 0.0;
  Box dep_marks;
  // Optional fast path: difference at a point known to be absent from w,
  // given F(w). Must equal the generic difference in that case.
  std::function<double(const Mark&, double, const Configuration&, double)> fresh_diff;
};

// F(w), checking the declared bound.
double evaluate(const Functional& F, const Configuration& w);

// D_{(u,t)}F(w) = F(add_mass(w,(u,t))) - F(w). Evaluator exceptions map to 0
// with a logged warning (the difference is only defined off a null set).
double difference(const Functional& F, const Mark& u, double t, const Configuration& w);

// Cylindrical functional h(<f_1,mu>, ..., <f_n,mu>).
struct Cylindrical {
  std::function<double(std::span<const double>)> h;
  std::vector<MarkTimeFunction> fs;
  double bound = 0.0;

  std::vector<double> pairings(const Configuration& w) const;
  Functional as_functional() const;
};

// h(v + f(u,t)) - h(v) where v are the pairings; equals difference() whenever
// v = pairings(w) and (u,t) is not a point of w.
double difference_closed_form(const Cylindrical& F, const Mark& u, double t,
                              std::span<const double> pairings);

// ---- Built-in test family -------------------------------------------------

// Smooth clip of v^2: exactly v^2 for |v| <= a, constant beyond b, C^1 blend
// in between.
double smooth_clipped_square(double v, double a, double b);

MarkTimeFunction indicator_function(const Box& box, double amplitude);
// C^1 bump amplitude * prod_i (1 - s_i^2)^2, s_i the box-normalized coords.
MarkTimeFunction bump_function(const Box& box, double amplitude);

// F = <f,mu> with a generous declared bound.
Cylindrical linear_functional(const MarkTimeFunction& f, double bound);
// F = clip(<f,mu>^2): exactly the square inside |v| <= clip_lo.
Cylindrical quadratic_functional(const MarkTimeFunction& f, double clip_lo, double clip_hi);
// F = tanh(<f,mu>)
Cylindrical tanh_functional(const MarkTimeFunction& f);
// F = c * min(N_box, cap)
Functional count_functional(const Box& box, double c, double cap = 64.0);

}  // namespace plab

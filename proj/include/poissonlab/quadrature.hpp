#pragma once

#include <functional>
#include <vector>

#include "poissonlab/common.hpp"

namespace plab {

// Deterministic adaptive Simpson on [a,b] to absolute tolerance `tol`.
double integrate_1d(const std::function<double(double)>& f, double a, double b, double tol);

// Same, but the integration range is first split at the given breakpoints
// (useful for piecewise-defined integrands).
double integrate_1d_split(const std::function<double(double)>& f, double a, double b,
                          const std::vector<double>& breaks, double tol);

// Nested adaptive integral of f over a mark box (d <= 3).
double integrate_box(const std::function<double(const Mark&)>& f, const Box& box, double tol);

// Fixed Gauss-Legendre rule on [a,b]; n in {4,8,16,32}.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussRule gauss_legendre(int n, double a, double b);

// Tensor-product Gauss-Legendre nodes over a box.
struct BoxRule {
  std::vector<Mark> nodes;
  std::vector<double> weights;
};
BoxRule gauss_box(int n_per_axis, const Box& box);

}  // namespace plab

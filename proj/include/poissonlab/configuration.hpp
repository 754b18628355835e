#pragma once

#include <functional>
#include <vector>

#include "poissonlab/common.hpp"
#include "poissonlab/intensity.hpp"
#include "poissonlab/rng.hpp"

namespace plab {

struct Point {
  Mark u{0, 0, 0};
  double t = 0.0;
};

inline bool point_less(const Point& a, const Point& b) {
  if (a.t != b.t) return a.t < b.t;
  return a.u < b.u;  // lexicographic tie-break
}
inline bool point_eq(const Point& a, const Point& b) { return a.t == b.t && a.u == b.u; }

// A finite simple configuration of marked points, sorted by time with
// lexicographic mark tie-break. Immutable value type.
class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(std::vector<Point> pts);

  const std::vector<Point>& points() const { return pts_; }
  std::size_t size() const { return pts_.size(); }
  bool empty() const { return pts_.empty(); }
  bool contains(const Point& p) const;

  // All points with time <= s.
  Configuration restrict_time(double s) const;

 private:
  std::vector<Point> pts_;
};

// Adding a mass: the point is present exactly once afterwards.
Configuration add_mass(const Configuration& w, const Point& p);
// Removing a mass: the point is absent afterwards.
Configuration remove_mass(const Configuration& w, const Point& p);

// A mark-time test function with declared compact support.
struct MarkTimeFunction {
  std::function<double(const Mark&, double)> f;
  Box support;                  // mark support box
  Interval time_support{0, 1};  // time support
  double operator()(const Mark& u, double t) const { return f(u, t); }
};

// <f, mu_w> = sum of f over the points of w.
double pairing(const MarkTimeFunction& f, const Configuration& w);

// pairing(psi, w) minus the compensator integral of psi over `win`.
double compensated_integral(const MarkTimeFunction& psi, const Configuration& w,
                            const IntensityModel& model, const Window& win);

// Compensator integral alone: time-length times the nu-integral of psi.
double compensator_integral(const MarkTimeFunction& psi, const IntensityModel& model,
                            const Window& win);

// Poisson sample on the window: count ~ Poisson(window_mass), marks iid
// proportional to the density, times iid uniform on the time interval.
Configuration simulate(const IntensityModel& model, const Window& win, Rng& rng);

}  // namespace plab

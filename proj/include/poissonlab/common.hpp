#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace plab {

// Mark point in R^d, d <= 3. Unused coordinates stay at zero so lexicographic
// comparison over all three slots is well defined for any dimension.
using Mark = std::array<double, 3>;

inline Mark mark1(double x) { return Mark{x, 0.0, 0.0}; }
inline Mark mark2(double x, double y) { return Mark{x, y, 0.0}; }
inline Mark mark3(double x, double y, double z) { return Mark{x, y, z}; }

inline double norm2(const Mark& u, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += u[i] * u[i];
  return std::sqrt(s);
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
  bool contains(const Interval& o) const { return o.lo >= lo && o.hi <= hi; }
  bool empty() const { return hi <= lo; }
};

struct Box {
  int dim = 1;
  std::array<Interval, 3> axes{};

  static Box make(int d, const double* lo, const double* hi) {
    Box b;
    b.dim = d;
    for (int i = 0; i < d; ++i) b.axes[i] = Interval{lo[i], hi[i]};
    return b;
  }
  static Box make1(double lo, double hi) {
    double l[1] = {lo}, h[1] = {hi};
    return make(1, l, h);
  }
  static Box make2(double lx, double hx, double ly, double hy) {
    double l[2] = {lx, ly}, h[2] = {hx, hy};
    return make(2, l, h);
  }

  double volume() const {
    double v = 1.0;
    for (int i = 0; i < dim; ++i) v *= axes[i].length();
    return v;
  }
  bool contains(const Mark& u) const {
    for (int i = 0; i < dim; ++i)
      if (!axes[i].contains(u[i])) return false;
    return true;
  }
  bool contains(const Box& o) const {
    if (o.dim != dim) return false;
    for (int i = 0; i < dim; ++i)
      if (!axes[i].contains(o.axes[i])) return false;
    return true;
  }
  Box expanded(const std::array<double, 3>& pad) const {
    Box b = *this;
    for (int i = 0; i < dim; ++i) {
      b.axes[i].lo -= pad[i];
      b.axes[i].hi += pad[i];
    }
    return b;
  }
  // Point of the box closest to the origin, axis by axis.
  Mark clamp_origin() const {
    Mark m{0, 0, 0};
    for (int i = 0; i < dim; ++i) {
      double c = 0.0;
      if (c < axes[i].lo) c = axes[i].lo;
      if (c > axes[i].hi) c = axes[i].hi;
      m[i] = c;
    }
    return m;
  }
  // Corner of the box farthest from the origin.
  Mark far_corner() const {
    Mark m{0, 0, 0};
    for (int i = 0; i < dim; ++i)
      m[i] = std::abs(axes[i].lo) > std::abs(axes[i].hi) ? axes[i].lo : axes[i].hi;
    return m;
  }
};

// Simulation window: a mark box plus a time interval inside [0,1].
struct Window {
  Box marks;
  Interval time{0.0, 1.0};
  bool contains(const Mark& u, double t) const { return marks.contains(u) && time.contains(t); }
};

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Request outside the declared/evaluable region.
struct DomainError : Error {
  using Error::Error;
};
// Invalid experiment configuration.
struct ConfigError : Error {
  using Error::Error;
};
// A declared invariant was violated at runtime (bound, simplicity, envelope, 1+phi<=0).
struct ContractError : Error {
  using Error::Error;
};
struct ParameterError : Error {
  using Error::Error;
};
// Root bracket or transported point escaped the padded window.
struct BufferOverflowError : Error {
  using Error::Error;
};

inline double sq(double x) { return x * x; }

}  // namespace plab

#include "poissonlab/configuration.hpp"

#include <algorithm>

#include "poissonlab/quadrature.hpp"

namespace plab {

Configuration::Configuration(std::vector<Point> pts) : pts_(std::move(pts)) {
  std::sort(pts_.begin(), pts_.end(), point_less);
  for (std::size_t i = 0; i + 1 < pts_.size(); ++i)
    if (point_eq(pts_[i], pts_[i + 1]))
      throw ContractError("Configuration: duplicate point; configurations must be simple");
  for (const Point& p : pts_)
    if (p.t < 0.0 || p.t > 1.0)
      throw ContractError("Configuration: point time outside [0,1]");
}

bool Configuration::contains(const Point& p) const {
  auto it = std::lower_bound(pts_.begin(), pts_.end(), p, point_less);
  return it != pts_.end() && point_eq(*it, p);
}

Configuration Configuration::restrict_time(double s) const {
  std::vector<Point> kept;
  for (const Point& p : pts_) {
    if (p.t > s) break;
    kept.push_back(p);
  }
  Configuration out;
  out.pts_ = std::move(kept);  // already sorted and simple
  return out;
}

Configuration add_mass(const Configuration& w, const Point& p) {
  if (w.contains(p)) return w;
  std::vector<Point> pts = w.points();
  pts.insert(std::upper_bound(pts.begin(), pts.end(), p, point_less), p);
  return Configuration(std::move(pts));
}

Configuration remove_mass(const Configuration& w, const Point& p) {
  if (!w.contains(p)) return w;
  std::vector<Point> pts;
  pts.reserve(w.size() - 1);
  for (const Point& q : w.points())
    if (!point_eq(q, p)) pts.push_back(q);
  return Configuration(std::move(pts));
}

double pairing(const MarkTimeFunction& f, const Configuration& w) {
  double s = 0.0;
  for (const Point& p : w.points()) s += f(p.u, p.t);
  return s;
}

double compensator_integral(const MarkTimeFunction& psi, const IntensityModel& model,
                            const Window& win) {
  // psi is assumed piecewise-smooth in time on the window; integrate the
  // nu-average over marks in time.
  const double tol = model.quadrature_tol();
  auto nu_avg = [&](double t) {
    return integrate_nu(model, [&](const Mark& u) { return psi(u, t); }, psi.support);
  };
  return integrate_1d(nu_avg, std::max(win.time.lo, psi.time_support.lo),
                      std::min(win.time.hi, psi.time_support.hi), tol);
}

double compensated_integral(const MarkTimeFunction& psi, const Configuration& w,
                            const IntensityModel& model, const Window& win) {
  if (!win.marks.contains(psi.support) || !win.time.contains(psi.time_support))
    throw DomainError("compensated_integral: support escapes the window");
  return pairing(psi, w) - compensator_integral(psi, model, win);
}

Configuration simulate(const IntensityModel& model, const Window& win, Rng& rng) {
  const double mass = window_mass(model, win);
  const std::uint64_t n = rng.poisson(mass);
  std::vector<Point> pts;
  pts.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    Point p;
    p.u = sample_mark(model, win.marks, rng);
    p.t = rng.uniform(win.time.lo, win.time.hi);
    pts.push_back(p);
  }
  return Configuration(std::move(pts));
}

}  // namespace plab

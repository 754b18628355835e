#include "poissonlab/intensity.hpp"

#include <algorithm>
#include <cmath>

#include "poissonlab/quadrature.hpp"

namespace plab {

IntensityModel::IntensityModel(int dim, std::function<double(const Mark&)> density,
                               double density_floor, std::vector<Box> declared_windows,
                               DivergenceClaim claim, std::string name)
    : dim_(dim),
      density_(std::move(density)),
      floor_(density_floor),
      declared_(std::move(declared_windows)),
      claim_(claim),
      name_(std::move(name)) {
  if (dim_ < 1 || dim_ > 3) throw ParameterError("IntensityModel: dimension must be 1, 2 or 3");
  if (!(floor_ > 0.0)) throw ParameterError("IntensityModel: density_floor must be positive");
  if (declared_.empty()) throw ParameterError("IntensityModel: no declared windows");
}

bool IntensityModel::declared(const Box& b) const {
  for (const Box& w : declared_)
    if (w.contains(b)) return true;
  return false;
}

void IntensityModel::require_declared(const Box& b) const {
  if (!declared(b)) throw DomainError("window outside the declared region of model " + name_);
}

double IntensityModel::sup_density(const Box& b) const {
  const double at_closest = density_(b.clamp_origin());
  const double at_far = density_(b.far_corner());
  return std::max(at_closest, at_far);
}

double nu_mass(const IntensityModel& model, const Box& box) {
  model.require_declared(box);
  return integrate_box([&](const Mark& u) { return model.density(u); }, box,
                       model.quadrature_tol());
}

double window_mass(const IntensityModel& model, const Window& w) {
  if (w.marks.volume() <= 0.0 || w.time.empty())
    throw ParameterError("window_mass: empty window");
  return nu_mass(model, w.marks) * w.time.length();
}

double integrate_nu(const IntensityModel& model, const std::function<double(const Mark&)>& f,
                    const Box& box) {
  model.require_declared(box);
  return integrate_box([&](const Mark& u) { return f(u) * model.density(u); }, box,
                       model.quadrature_tol());
}

double marginal_cumulative(const IntensityModel& model,
                           const std::function<double(const Mark&)>& weight, int axis,
                           const Mark& at, double x, const std::vector<double>& axis_breaks) {
  if (axis < 0 || axis >= model.dim())
    throw ParameterError("marginal_cumulative: bad axis");
  if (x == 0.0) return 0.0;

  // Cross-section box between 0 and the remaining coordinates of `at`.
  Box slab;
  slab.dim = model.dim() - 1;
  int k = 0;
  for (int j = 0; j < model.dim(); ++j) {
    if (j == axis) continue;
    slab.axes[k++] = Interval{std::min(at[j], 0.0), std::max(at[j], 0.0)};
  }

  auto line_density = [&](double s) {
    if (model.dim() == 1) {
      Mark u = mark1(0.0);
      u[axis] = s;
      return (weight ? weight(u) : 1.0) * model.density(u);
    }
    return integrate_box(
        [&](const Mark& v) {
          Mark u{0, 0, 0};
          int kk = 0;
          for (int j = 0; j < model.dim(); ++j) {
            if (j == axis) {
              u[j] = s;
            } else {
              u[j] = v[kk++];
            }
          }
          return (weight ? weight(u) : 1.0) * model.density(u);
        },
        slab, model.quadrature_tol());
  };

  return integrate_1d_split(line_density, 0.0, x, axis_breaks, model.quadrature_tol());
}

Mark sample_mark(const IntensityModel& model, const Box& box, Rng& rng) {
  const double env = model.sup_density(box);
  if (!(env > 0.0)) throw ParameterError("sample_mark: empty envelope");
  for (int tries = 0; tries < 1000000; ++tries) {
    Mark u{0, 0, 0};
    for (int i = 0; i < model.dim(); ++i)
      u[i] = rng.uniform(box.axes[i].lo, box.axes[i].hi);
    const double d = model.density(u);
    if (d > env * (1.0 + 1e-12))
      throw ContractError("sample_mark: density above its declared envelope");
    if (rng.uniform01() * env < d) return u;
  }
  throw ContractError("sample_mark: rejection sampler failed to accept");
}

bool spot_check_divergence(const IntensityModel& model, double threshold, int max_doublings) {
  if (model.claim() == DivergenceClaim::none) return true;
  auto half_mass = [&](double sign, double len) {
    Box b;
    b.dim = model.dim();
    b.axes[0] = sign > 0 ? Interval{0.0, len} : Interval{-len, 0.0};
    for (int j = 1; j < model.dim(); ++j) b.axes[j] = Interval{0.0, 1.0};
    return integrate_box([&](const Mark& u) { return model.density(u); }, b, 1e-6);
  };
  auto diverges = [&](double sign) {
    double len = 1.0;
    double prev = -1.0;
    for (int i = 0; i < max_doublings; ++i) {
      const double m = half_mass(sign, len);
      if (m >= threshold) return true;
      if (m <= prev + 1e-12) return false;  // stalled: looks convergent
      prev = m;
      len *= 2.0;
    }
    return false;
  };
  const bool pos = model.claim() == DivergenceClaim::positive_axis ||
                   model.claim() == DivergenceClaim::both;
  const bool neg = model.claim() == DivergenceClaim::negative_axis ||
                   model.claim() == DivergenceClaim::both;
  if (pos && !diverges(+1.0)) return false;
  if (neg && !diverges(-1.0)) return false;
  return true;
}

std::shared_ptr<const IntensityModel> make_catalog_model(const std::string& name, double param,
                                                         int dim, const Box& declared) {
  std::vector<Box> windows{declared};
  if (name == "lebesgue") {
    return std::make_shared<IntensityModel>(
        dim, [](const Mark&) { return 1.0; }, 1.0, windows, DivergenceClaim::both, name);
  }
  if (name == "exp_decay") {
    const double rate = param;
    if (!(rate > 0.0)) throw ConfigError("exp_decay: rate must be positive");
    const double rmax = norm2(declared.far_corner(), dim);
    const double floor = std::exp(-rate * rmax);
    return std::make_shared<IntensityModel>(
        dim, [rate, dim](const Mark& u) { return std::exp(-rate * norm2(u, dim)); }, floor,
        windows, DivergenceClaim::none, name);
  }
  if (name == "gaussian_bump") {
    const double sigma = param;
    if (!(sigma > 0.0)) throw ConfigError("gaussian_bump: sigma must be positive");
    return std::make_shared<IntensityModel>(
        dim,
        [sigma, dim](const Mark& u) {
          const double r = norm2(u, dim);
          return 1.0 + std::exp(-0.5 * r * r / (sigma * sigma));
        },
        1.0, windows, DivergenceClaim::both, name);
  }
  throw ConfigError("unknown intensity model: " + name);
}

}  // namespace plab

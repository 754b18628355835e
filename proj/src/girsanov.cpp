#include "poissonlab/girsanov.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "poissonlab/quadrature.hpp"

namespace plab {

namespace {

struct BoxKey {
  const void* model;
  int dim;
  std::array<double, 6> c;
  bool operator<(const BoxKey& o) const {
    if (model != o.model) return model < o.model;
    if (dim != o.dim) return dim < o.dim;
    return c < o.c;
  }
};

// nu(box) is pure quadrature; memoize it, controls reuse a handful of boxes.
double nu_mass_cached(const IntensityModel& model, const Box& b) {
  static std::mutex mtx;
  static std::map<BoxKey, double> cache;
  BoxKey key{&model, b.dim, {}};
  for (int i = 0; i < b.dim; ++i) {
    key.c[2 * i] = b.axes[i].lo;
    key.c[2 * i + 1] = b.axes[i].hi;
  }
  {
    std::lock_guard<std::mutex> lk(mtx);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  const double v = nu_mass(model, b);
  std::lock_guard<std::mutex> lk(mtx);
  cache.emplace(key, v);
  return v;
}

}  // namespace

double doleans(const Control& phi, const Configuration& omega, const IntensityModel& model,
               const Window& win) {
  if (!win.marks.contains(phi.support()))
    throw DomainError("doleans: control support escapes the window");
  // Realize each piece once; point values and the compensator then share the
  // same realized field.
  std::vector<std::vector<double>> vals(phi.piece_count());
  double compensator = 0.0;
  for (std::size_t i = 0; i < phi.piece_count(); ++i) {
    vals[i] = phi.realize(i, omega.restrict_time(phi.knots()[i]));
    double per_time = 0.0;
    for (std::size_t k = 0; k < vals[i].size(); ++k)
      per_time += vals[i][k] * nu_mass_cached(model, phi.pieces()[i].cells[k].box);
    compensator += per_time * phi.piece_length(i);
  }
  double log_sum = 0.0;
  for (const Point& p : omega.points()) {
    if (!win.marks.contains(p.u)) throw DomainError("doleans: point outside the window");
    if (!phi.support().contains(p.u)) continue;
    const std::size_t i = phi.piece_index(p.t);
    double v = 0.0;
    for (std::size_t k = 0; k < vals[i].size(); ++k)
      if (phi.pieces()[i].cells[k].box.contains(p.u)) {
        v = vals[i][k];
        break;
      }
    if (v <= -1.0) throw ContractError("doleans: 1 + phi must stay positive");
    log_sum += std::log1p(v);
  }
  return std::exp(log_sum - compensator);
}

double entropy_cost(const Control& phi, const Configuration* omega,
                    const IntensityModel& model) {
  const Configuration empty;
  const Configuration& w = omega ? *omega : empty;
  if (!omega && !phi.deterministic())
    throw ParameterError("entropy_cost: past-dependent control needs a configuration");
  double total = 0.0;
  for (std::size_t i = 0; i < phi.piece_count(); ++i) {
    const Configuration past = w.restrict_time(phi.knots()[i]);
    const std::vector<double> vals = phi.realize(i, past);
    double per_time = 0.0;
    for (std::size_t k = 0; k < vals.size(); ++k)
      per_time += entropy_integrand(vals[k]) *
                  nu_mass_cached(model, phi.pieces()[i].cells[k].box);
    total += per_time * phi.piece_length(i);
  }
  return total;
}

double entropy_quadratic_constant(double c0, double c1) {
  auto ratio = [](double x) {
    if (std::abs(x) < 1e-8) return 0.5;
    return entropy_integrand(x) / (x * x);
  };
  double best = 0.5;
  for (int i = 0; i <= 1000; ++i) {
    const double x = c0 + (c1 - c0) * static_cast<double>(i) / 1000.0;
    best = std::max(best, ratio(x));
  }
  return best;
}

double phi_squared_pi_integral(const Control& phi, const Configuration* omega,
                               const IntensityModel& model) {
  const Configuration empty;
  const Configuration& w = omega ? *omega : empty;
  double total = 0.0;
  for (std::size_t i = 0; i < phi.piece_count(); ++i) {
    const Configuration past = w.restrict_time(phi.knots()[i]);
    const std::vector<double> vals = phi.realize(i, past);
    double per_time = 0.0;
    for (std::size_t k = 0; k < vals.size(); ++k)
      per_time += vals[k] * vals[k] *
                  nu_mass_cached(model, phi.pieces()[i].cells[k].box);
    total += per_time * phi.piece_length(i);
  }
  return total;
}

Estimate tilted_expectation_is(const Functional& F, const Control& phi,
                               const IntensityModel& model, const Window& win, int n,
                               const StreamKey& base_key) {
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    StreamKey key = base_key;
    key.replicate = static_cast<std::uint64_t>(j);
    Rng rng(key);
    const Configuration w = simulate(model, win, rng);
    xs[static_cast<std::size_t>(j)] = doleans(phi, w, model, win) * F.eval(w);
  }
  return mean_se(xs);
}

Configuration simulate_tilted(const Control& phi, const IntensityModel& model,
                              const Window& win, Rng& extra_rng, Rng& base_rng) {
  std::vector<Point> accepted;
  Configuration so_far;
  for (std::size_t i = 0; i < phi.piece_count(); ++i) {
    const Interval piece{std::max(phi.knots()[i], win.time.lo),
                         std::min(phi.knots()[i + 1], win.time.hi)};
    if (piece.empty()) continue;
    const Configuration past = so_far.restrict_time(phi.knots()[i]);
    const std::vector<double> vals = phi.realize(i, past);

    // Base points on the piece, thinned where phi < 0.
    Window wp{win.marks, piece};
    const Configuration base = simulate(model, wp, base_rng);
    for (const Point& p : base.points()) {
      double v = 0.0;
      if (phi.support().contains(p.u)) {
        for (std::size_t k = 0; k < vals.size(); ++k)
          if (phi.pieces()[i].cells[k].box.contains(p.u)) {
            v = vals[k];
            break;
          }
      }
      if (v >= 0.0 || base_rng.uniform01() < 1.0 + v) accepted.push_back(p);
    }
    // Superposed extra points on cells with positive phi.
    for (std::size_t k = 0; k < vals.size(); ++k) {
      if (vals[k] <= 0.0) continue;
      const Box& cell = phi.pieces()[i].cells[k].box;
      const double mean = vals[k] * nu_mass(model, cell) * piece.length();
      const std::uint64_t extra = extra_rng.poisson(mean);
      for (std::uint64_t e = 0; e < extra; ++e) {
        Point p;
        p.u = sample_mark(model, cell, extra_rng);
        p.t = extra_rng.uniform(piece.lo, piece.hi);
        accepted.push_back(p);
      }
    }
    so_far = Configuration(accepted);
  }
  return so_far;
}

Estimate tilted_expectation_direct(const Functional& F, const Control& phi,
                                   const IntensityModel& model, const Window& win, int n,
                                   const StreamKey& base_key) {
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    StreamKey bkey = base_key;
    bkey.replicate = static_cast<std::uint64_t>(j);
    StreamKey ekey = bkey;
    ekey.purpose = StreamPurpose::tilt_extra;
    Rng base(bkey), extra(ekey);
    const Configuration w = simulate_tilted(phi, model, win, extra, base);
    xs[static_cast<std::size_t>(j)] = F.eval(w);
  }
  return mean_se(xs);
}

Estimate relative_entropy(const Control& phi, const IntensityModel& model, const Window& win,
                          int n, const StreamKey& base_key) {
  if (phi.deterministic()) return Estimate{entropy_cost(phi, nullptr, model), 0.0};
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    StreamKey key = base_key;
    key.replicate = static_cast<std::uint64_t>(j);
    Rng rng(key);
    const Configuration w = simulate(model, win, rng);
    xs[static_cast<std::size_t>(j)] =
        doleans(phi, w, model, win) * entropy_cost(phi, &w, model);
  }
  return mean_se(xs);
}

MartingaleShiftReport martingale_shift_check(const MarkTimeFunction& psi, const Control& phi,
                                             const IntensityModel& model, const Window& win,
                                             int n, const StreamKey& base_key) {
  if (!phi.deterministic())
    throw ParameterError("martingale_shift_check: control must be deterministic");
  // Deterministic compensator pieces.
  const double c_plain = compensator_integral(psi, model, win);
  double c_shift = 0.0;
  const Configuration empty;
  for (std::size_t i = 0; i < phi.piece_count(); ++i) {
    const std::vector<double> vals = phi.realize(i, empty);
    for (std::size_t k = 0; k < vals.size(); ++k) {
      const Box& cell = phi.pieces()[i].cells[k].box;
      const double cross = integrate_1d(
          [&](double s) {
            return integrate_nu(model, [&](const Mark& u) { return psi(u, s); }, cell);
          },
          phi.knots()[i], phi.knots()[i + 1], model.quadrature_tol());
      c_shift += vals[k] * cross;
    }
  }
  auto shifted = [&](const Configuration& w) {
    return pairing(psi, w) - c_plain - c_shift;
  };

  MartingaleShiftReport rep;
  {
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      StreamKey key = base_key;
      key.replicate = static_cast<std::uint64_t>(j);
      Rng rng(key);
      const Configuration w = simulate(model, win, rng);
      xs[static_cast<std::size_t>(j)] = doleans(phi, w, model, win) * shifted(w);
    }
    rep.is = mean_se(xs);
  }
  {
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      StreamKey bkey = base_key;
      bkey.purpose = StreamPurpose::tilt_thin;
      bkey.replicate = static_cast<std::uint64_t>(j);
      StreamKey ekey = bkey;
      ekey.purpose = StreamPurpose::tilt_extra;
      Rng base(bkey), extra(ekey);
      const Configuration w = simulate_tilted(phi, model, win, extra, base);
      xs[static_cast<std::size_t>(j)] = shifted(w);
    }
    rep.direct = mean_se(xs);
  }
  rep.pass = std::abs(rep.is.value) <= 3.0 * rep.is.se &&
             std::abs(rep.direct.value) <= 3.0 * rep.direct.se;
  return rep;
}

}  // namespace plab

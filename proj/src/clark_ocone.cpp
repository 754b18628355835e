#include "poissonlab/clark_ocone.hpp"

#include <algorithm>
#include <cmath>

#include "poissonlab/parallel.hpp"

namespace plab {

TimeGrid TimeGrid::uniform(int m) {
  if (m < 1) throw ParameterError("TimeGrid: need at least one cell");
  TimeGrid g;
  g.knots.resize(static_cast<std::size_t>(m) + 1);
  for (int i = 0; i <= m; ++i)
    g.knots[static_cast<std::size_t>(i)] = static_cast<double>(i) / static_cast<double>(m);
  return g;
}

std::size_t TimeGrid::cell_of(double t) const {
  auto it = std::lower_bound(knots.begin(), knots.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - knots.begin());
  if (k == 0) return 0;
  return std::min(k - 1, cells() - 1);
}

namespace {
Configuration merge(const Configuration& a, const Configuration& b) {
  std::vector<Point> pts = a.points();
  pts.insert(pts.end(), b.points().begin(), b.points().end());
  return Configuration(std::move(pts));
}
}  // namespace

double predictable_projection(const Functional& F, const Mark& u, const TimeGrid& grid,
                              std::size_t cell, const Configuration& past,
                              const IntensityModel& model, const Window& win, int n_inner,
                              Rng& rng) {
  if (n_inner < 2) throw ParameterError("predictable_projection: n_inner must be at least 2");
  const double t_left = grid.knots[cell];
  if (!past.empty() && past.points().back().t > t_left)
    throw ParameterError("predictable_projection: past contains points after the cell start");
  const double t_probe = t_left + ProjectionEngine::kTimeNudge;
  const Window future_win{win.marks, Interval{t_left, win.time.hi}};
  double acc = 0.0;
  for (int j = 0; j < n_inner; ++j) {
    const Configuration future = simulate(model, future_win, rng);
    const Configuration w = merge(past, future);
    acc += difference(F, u, t_probe, w);
  }
  return acc / static_cast<double>(n_inner);
}

ProjectionEngine::ProjectionEngine(const Functional& F, std::optional<Cylindrical> cyl,
                                   std::shared_ptr<const IntensityModel> model, Window sim_window,
                                   TimeGrid grid, int n_inner, std::uint64_t seed, int gl_nodes)
    : F_(F),
      cyl_(std::move(cyl)),
      model_(std::move(model)),
      win_(sim_window),
      grid_(std::move(grid)),
      n_inner_(n_inner),
      seed_(seed),
      rule_(gauss_box(gl_nodes, F.dep_marks)) {
  if (n_inner_ < 2) throw ParameterError("ProjectionEngine: n_inner must be at least 2");
  if (!win_.marks.contains(F_.dep_marks))
    throw DomainError("ProjectionEngine: dependence window escapes the simulation window");
}

std::vector<double> ProjectionEngine::project_cell(std::size_t cell, const Configuration& past,
                                                   const std::vector<Mark>& at,
                                                   std::uint64_t replicate) const {
  const double t_left = grid_.knots[cell];
  const double t_probe = t_left + kTimeNudge;
  const Window future_win{win_.marks, Interval{t_left, win_.time.hi}};
  Rng rng(StreamKey{seed_, StreamPurpose::inner, replicate, cell});
  std::vector<double> acc(at.size(), 0.0);

  if (cyl_) {
    const std::vector<double> v_past = cyl_->pairings(past);
    std::vector<double> v(v_past.size()), shifted(v_past.size());
    for (int j = 0; j < n_inner_; ++j) {
      const Configuration future = simulate(*model_, future_win, rng);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = v_past[i] + pairing(cyl_->fs[i], future);
      const double h_v = cyl_->h(v);
      for (std::size_t a = 0; a < at.size(); ++a) {
        for (std::size_t i = 0; i < v.size(); ++i)
          shifted[i] = v[i] + cyl_->fs[i](at[a], t_probe);
        acc[a] += cyl_->h(shifted) - h_v;
      }
    }
  } else {
    for (int j = 0; j < n_inner_; ++j) {
      const Configuration future = simulate(*model_, future_win, rng);
      const Configuration w = merge(past, future);
      if (F_.fresh_diff) {
        const double Fw = F_.eval(w);
        for (std::size_t a = 0; a < at.size(); ++a)
          acc[a] += F_.fresh_diff(at[a], t_probe, w, Fw);
      } else {
        for (std::size_t a = 0; a < at.size(); ++a)
          acc[a] += difference(F_, at[a], t_probe, w);
      }
    }
  }
  for (double& x : acc) x /= static_cast<double>(n_inner_);
  return acc;
}

ReconstructResult ProjectionEngine::reconstruct(const Configuration& omega,
                                                std::uint64_t replicate, double e_hat) const {
  const std::size_t m = grid_.cells();
  // Marks to project per cell: the tensor quadrature nodes, then any points
  // of omega that fall in the cell.
  std::vector<std::vector<Mark>> marks(m);
  std::vector<std::vector<std::size_t>> point_of_cell(m);
  for (std::size_t c = 0; c < m; ++c)
    marks[c].assign(rule_.nodes.begin(), rule_.nodes.end());
  const auto& pts = omega.points();
  for (std::size_t p = 0; p < pts.size(); ++p) {
    const std::size_t c = grid_.cell_of(pts[p].t);
    marks[c].push_back(pts[p].u);
    point_of_cell[c].push_back(p);
  }

  double point_sum = 0.0;
  double compensator = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    const Configuration past = omega.restrict_time(grid_.knots[c]);
    const std::vector<double> proj = project_cell(c, past, marks[c], replicate);
    const double dt = grid_.knots[c + 1] - grid_.knots[c];
    double cell_int = 0.0;
    for (std::size_t j = 0; j < rule_.nodes.size(); ++j)
      cell_int += rule_.weights[j] * model_->density(rule_.nodes[j]) * proj[j];
    compensator += dt * cell_int;
    for (std::size_t k = 0; k < point_of_cell[c].size(); ++k)
      point_sum += proj[rule_.nodes.size() + k];
  }
  ReconstructResult r;
  r.e_hat = e_hat;
  r.martingale_part = point_sum - compensator;
  r.value = e_hat + r.martingale_part;
  return r;
}

Estimate ProjectionEngine::outer_mean(int n) const {
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    Rng rng(StreamKey{seed_, StreamPurpose::outer_mean, static_cast<std::uint64_t>(j), 0});
    xs[static_cast<std::size_t>(j)] = F_.eval(simulate(*model_, win_, rng));
  }
  return mean_se(xs);
}

ProjectionField ProjectionEngine::field(const Configuration& omega,
                                        std::uint64_t replicate) const {
  ProjectionField f;
  f.mark_rule = rule_;
  const std::size_t m = grid_.cells();
  f.values.resize(m);
  f.std_errors.resize(m);
  const std::vector<Mark> at(rule_.nodes.begin(), rule_.nodes.end());
  for (std::size_t c = 0; c < m; ++c) {
    const Configuration past = omega.restrict_time(grid_.knots[c]);
    // Two half-size passes give a cheap spread estimate per node.
    const std::vector<double> mean = project_cell(c, past, at, replicate);
    f.values[c] = mean;
    f.std_errors[c].assign(at.size(), 0.0);
    const double t_left = grid_.knots[c];
    const double t_probe = t_left + kTimeNudge;
    const Window future_win{win_.marks, Interval{t_left, win_.time.hi}};
    Rng rng(StreamKey{seed_, StreamPurpose::inner, replicate, c});
    std::vector<std::vector<double>> samples(at.size());
    if (cyl_) {
      const std::vector<double> v_past = cyl_->pairings(past);
      std::vector<double> v(v_past.size()), shifted(v_past.size());
      for (int j = 0; j < n_inner_; ++j) {
        const Configuration future = simulate(*model_, future_win, rng);
        for (std::size_t i = 0; i < v.size(); ++i)
          v[i] = v_past[i] + pairing(cyl_->fs[i], future);
        const double h_v = cyl_->h(v);
        for (std::size_t a = 0; a < at.size(); ++a) {
          for (std::size_t i = 0; i < v.size(); ++i)
            shifted[i] = v[i] + cyl_->fs[i](at[a], t_probe);
          samples[a].push_back(cyl_->h(shifted) - h_v);
        }
      }
    } else {
      for (int j = 0; j < n_inner_; ++j) {
        const Configuration future = simulate(*model_, future_win, rng);
        const Configuration w = merge(past, future);
        const double Fw = F_.eval(w);
        for (std::size_t a = 0; a < at.size(); ++a)
          samples[a].push_back(F_.fresh_diff ? F_.fresh_diff(at[a], t_probe, w, Fw)
                                             : difference(F_, at[a], t_probe, w));
      }
    }
    for (std::size_t a = 0; a < at.size(); ++a) f.std_errors[c][a] = mean_se(samples[a]).se;
  }
  return f;
}

Configuration ProjectionEngine::simulate_outer(std::uint64_t replicate) const {
  Rng rng(StreamKey{seed_, StreamPurpose::simulate, replicate, 0});
  return simulate(*model_, win_, rng);
}

ResidualReport residual(const ProjectionEngine& eng, int n_outer, int e_hat_n, int workers) {
  ResidualReport rep;
  rep.n_outer = n_outer;
  rep.e_hat = eng.outer_mean(e_hat_n);

  std::vector<double> sq(static_cast<std::size_t>(n_outer));
  std::vector<double> mart(static_cast<std::size_t>(n_outer));
  std::vector<double> Fs(static_cast<std::size_t>(n_outer));
  parallel_for(static_cast<std::size_t>(n_outer), workers, [&](std::size_t r) {
    const Configuration omega = eng.simulate_outer(r);
    const double Fw = eng.eval_functional(omega);
    const ReconstructResult rec = eng.reconstruct(omega, r, rep.e_hat.value);
    Fs[r] = Fw;
    mart[r] = rec.martingale_part;
    sq[r] = (Fw - rec.value) * (Fw - rec.value);
  });
  double s = 0.0;
  for (double x : sq) s += x;
  rep.residual = std::sqrt(s / static_cast<double>(n_outer));
  rep.se = bootstrap_se_rms(sq, eng.seed());
  rep.sd_F = std::sqrt(variance_of(Fs));
  const Estimate me = mean_se(mart);
  rep.mart_mean = me.value;
  rep.mart_mean_se = me.se;
  return rep;
}

}  // namespace plab

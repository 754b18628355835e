#include "poissonlab/variational.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

namespace plab {

Estimate variational_lhs(const Functional& F, const IntensityModel& model, const Window& win,
                         int n, const StreamKey& base_key) {
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    StreamKey key = base_key;
    key.replicate = static_cast<std::uint64_t>(j);
    Rng rng(key);
    xs[static_cast<std::size_t>(j)] = std::exp(-F.eval(simulate(model, win, rng)));
  }
  return neg_log_mean(xs);
}

Estimate dual_tilt(const Functional& F, const Control& phi, const IntensityModel& model,
                   const Window& win, int n, const StreamKey& base_key) {
  const bool det = phi.deterministic();
  const double L_det = det ? entropy_cost(phi, nullptr, model) : 0.0;
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    StreamKey key = base_key;
    key.replicate = static_cast<std::uint64_t>(j);
    Rng rng(key);
    const Configuration w = simulate(model, win, rng);
    const double L = det ? L_det : entropy_cost(phi, &w, model);
    xs[static_cast<std::size_t>(j)] = doleans(phi, w, model, win) * (F.eval(w) + L);
  }
  return mean_se(xs);
}

Estimate dual_transport(const Functional& F, const Control& phi, const TransportEngine& eng,
                        int n, const StreamKey& base_key) {
  const IntensityModel& model = eng.model();
  const Window padded = eng.plan().padded();
  const bool det = phi.deterministic();
  const double L_det = det ? entropy_cost(phi, nullptr, model) : 0.0;
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    StreamKey key = base_key;
    key.replicate = static_cast<std::uint64_t>(j);
    Rng rng(key);
    const Configuration w = simulate(model, padded, rng);
    const Configuration moved = eng.gamma_transform(phi, w, GammaDirection::minus);
    const double L = det ? L_det : entropy_cost(phi, &w, model);
    xs[static_cast<std::size_t>(j)] = F.eval(moved) + L;
  }
  return mean_se(xs);
}

double control_bound_alpha(double sup_norm) { return std::exp(-2.0 * sup_norm) - 1.0; }
double control_bound_beta(double sup_norm) { return 1.0 + std::exp(2.0 * sup_norm); }

RatioEstimate optimal_control_ratio(const Functional& F, const Mark& u, double t_left,
                                    const Configuration& past, const IntensityModel& model,
                                    const Window& win, int n_inner, Rng& rng, double alpha,
                                    double beta) {
  if (n_inner < 2) throw ParameterError("optimal_control_ratio: n_inner must be at least 2");
  const double t_probe = t_left + 0x1.0p-40;
  const Window future_win{win.marks, Interval{t_left, win.time.hi}};
  std::vector<double> num(static_cast<std::size_t>(n_inner));
  std::vector<double> den(static_cast<std::size_t>(n_inner));
  for (int j = 0; j < n_inner; ++j) {
    const Configuration future = simulate(model, future_win, rng);
    std::vector<Point> pts = past.points();
    pts.insert(pts.end(), future.points().begin(), future.points().end());
    const Configuration w(std::move(pts));
    const double base = std::exp(-F.eval(w));
    const double bumped = std::exp(-F.eval(add_mass(w, Point{u, t_probe})));
    num[static_cast<std::size_t>(j)] = bumped - base;
    den[static_cast<std::size_t>(j)] = base;
  }
  const double nbar = mean_of(num);
  const double dbar = mean_of(den);
  RatioEstimate r;
  r.raw = nbar / dbar;
  r.value = std::clamp(r.raw, alpha, beta);
  // Delta-method standard error of the ratio.
  double s = 0.0;
  for (std::size_t j = 0; j < num.size(); ++j) s += sq(num[j] - r.raw * den[j]);
  s /= static_cast<double>(num.size() - 1);
  r.se = std::sqrt(s / static_cast<double>(num.size())) / std::abs(dbar);
  return r;
}

namespace {
std::uint64_t hash_configuration(const Configuration& w) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t x) {
    h ^= x;
    h *= 1099511628211ull;
  };
  for (const Point& p : w.points()) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(double));
    std::memcpy(&bits, &p.t, 8);
    mix(bits);
    for (int i = 0; i < 3; ++i) {
      std::memcpy(&bits, &p.u[i], 8);
      mix(bits);
    }
  }
  return h;
}
}  // namespace

Control optimal_control(const Functional& F, std::shared_ptr<const IntensityModel> model,
                        const Window& win, const std::vector<double>& time_knots,
                        const std::vector<Box>& mark_cells, const Box& support, int n_inner,
                        std::uint64_t seed) {
  // For large sup norms the exact bounds collapse to the ends of the
  // admissible open interval in double arithmetic; keep strictly inside.
  const double alpha = std::max(control_bound_alpha(F.bound), -1.0 + 1e-9);
  const double beta = std::min(control_bound_beta(F.bound), 1e15);
  std::vector<ControlPiece> pieces;
  for (std::size_t i = 0; i + 1 < time_knots.size(); ++i) {
    ControlPiece piece;
    piece.past_dependent = true;
    const double t_left = time_knots[i];
    for (std::size_t k = 0; k < mark_cells.size(); ++k) {
      ControlCell cell;
      cell.box = mark_cells[k];
      cell.vmin = alpha;
      cell.vmax = beta;
      Mark center{0, 0, 0};
      for (int a = 0; a < mark_cells[k].dim; ++a)
        center[a] = 0.5 * (mark_cells[k].axes[a].lo + mark_cells[k].axes[a].hi);
      const std::uint64_t cell_id = i * mark_cells.size() + k;
      cell.value = [F, model, win, t_left, center, n_inner, seed, cell_id, alpha,
                    beta](const Configuration& past) {
        Rng rng(StreamKey{seed, StreamPurpose::optimal_control, hash_configuration(past),
                          cell_id});
        return optimal_control_ratio(F, center, t_left, past, *model, win, n_inner, rng, alpha,
                                     beta)
            .value;
      };
      piece.cells.push_back(std::move(cell));
    }
    pieces.push_back(std::move(piece));
  }
  return Control(time_knots, pieces, alpha, beta, support);
}

Control ControlFamily::make(std::span<const double> params) const {
  if (params.size() != param_count())
    throw ParameterError("ControlFamily: wrong parameter count");
  std::vector<ControlPiece> pieces;
  std::size_t idx = 0;
  double vmin = 0.0, vmax = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    ControlPiece piece;
    for (const Box& cell : mark_cells) {
      const double v = std::clamp(params[idx++], lo, hi);
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
      piece.cells.push_back(ControlCell::constant(cell, v));
    }
    pieces.push_back(std::move(piece));
  }
  const double c0 = std::min(vmin, 0.0);
  const double c1 = std::max(vmax, 1e-9);
  return Control(knots, pieces, c0, c1, support);
}

namespace {

struct SimplexPoint {
  std::vector<double> x;
  double f = 0.0;
};

}  // namespace

MinimizeResult minimize_dual(const Functional& F, const ControlFamily& family,
                             const TransportEngine& eng, int n_mc, int budget, int restarts,
                             std::uint64_t seed) {
  MinimizeResult out;
  const std::size_t p = family.param_count();
  int evals = 0;

  std::vector<std::vector<double>> winners;
  const int per_restart = std::max(budget / std::max(restarts, 1), 8);
  for (int restart = 0; restart < restarts; ++restart) {
    const int restart_cap = per_restart * (restart + 1);
    // Fresh common-random-number stream per restart.
    StreamKey crn{seed, StreamPurpose::optimizer, 0, static_cast<std::uint64_t>(restart)};
    auto objective = [&](const std::vector<double>& params) {
      ++evals;
      return dual_transport(F, family.make(params), eng, n_mc, crn).value;
    };
    // Candidates outside the box are mirrored at the edge rather than
    // clamped: a hard clamp can pin every vertex onto one face, after which
    // the simplex has lost that dimension for good.
    auto clampp = [&](std::vector<double>& x) {
      const double width = family.hi - family.lo;
      for (double& v : x) {
        if (v < family.lo) v = family.lo + std::min(family.lo - v, width);
        if (v > family.hi) v = family.hi - std::min(v - family.hi, width);
        v = std::clamp(v, family.lo, family.hi);
      }
    };

    // Deterministic spread of starting points across the box.
    std::vector<double> x0(p);
    const double frac = (static_cast<double>(restart) + 0.5) / static_cast<double>(restarts);
    for (std::size_t i = 0; i < p; ++i) x0[i] = family.lo + frac * (family.hi - family.lo);
    const double step = 0.25 * (family.hi - family.lo);

    std::vector<SimplexPoint> simplex(p + 1);
    simplex[0].x = x0;
    for (std::size_t i = 0; i < p; ++i) {
      simplex[i + 1].x = x0;
      simplex[i + 1].x[i] = x0[i] + (x0[i] + step <= family.hi ? step : -step);
    }
    for (auto& sp : simplex) {
      clampp(sp.x);
      sp.f = objective(sp.x);
    }

    double best_so_far = std::numeric_limits<double>::infinity();
    int stalled = 0;
    while (evals < restart_cap) {
      std::sort(simplex.begin(), simplex.end(),
                [](const SimplexPoint& a, const SimplexPoint& b) { return a.f < b.f; });
      if (simplex.front().f < best_so_far - 1e-9) {
        best_so_far = simplex.front().f;
        stalled = 0;
      } else {
        ++stalled;
      }
      out.trace.push_back(out.trace.empty() ? best_so_far
                                            : std::min(out.trace.back(), best_so_far));
      // Convergence on simplex spread.
      double spread = 0.0;
      for (std::size_t i = 0; i < p; ++i)
        spread = std::max(spread, std::abs(simplex.back().x[i] - simplex.front().x[i]));
      if (spread < 1e-4 && std::abs(simplex.back().f - simplex.front().f) < 1e-6) {
        out.converged = true;
        break;
      }
      if (stalled >= 10) {
        // Re-inflate a degenerate simplex around the incumbent best.
        stalled = 0;
        for (std::size_t s = 1; s < simplex.size(); ++s) {
          simplex[s].x = simplex.front().x;
          const double kick = 0.1 * (family.hi - family.lo);
          simplex[s].x[s - 1] += (simplex[s].x[s - 1] + kick <= family.hi ? kick : -kick);
          clampp(simplex[s].x);
          simplex[s].f = objective(simplex[s].x);
        }
        continue;
      }

      std::vector<double> centroid(p, 0.0);
      for (std::size_t s = 0; s + 1 < simplex.size(); ++s)
        for (std::size_t i = 0; i < p; ++i) centroid[i] += simplex[s].x[i];
      for (double& c : centroid) c /= static_cast<double>(p);

      auto combo = [&](double coef) {
        std::vector<double> x(p);
        for (std::size_t i = 0; i < p; ++i)
          x[i] = centroid[i] + coef * (simplex.back().x[i] - centroid[i]);
        clampp(x);
        return x;
      };

      const std::vector<double> xr = combo(-1.0);
      const double fr = objective(xr);
      if (fr < simplex.front().f) {
        const std::vector<double> xe = combo(-2.0);
        const double fe = objective(xe);
        if (fe < fr) {
          simplex.back() = {xe, fe};
        } else {
          simplex.back() = {xr, fr};
        }
      } else if (fr < simplex[simplex.size() - 2].f) {
        simplex.back() = {xr, fr};
      } else {
        const std::vector<double> xc = combo(0.5);
        const double fc = objective(xc);
        if (fc < simplex.back().f) {
          simplex.back() = {xc, fc};
        } else {
          for (std::size_t s = 1; s < simplex.size(); ++s) {
            for (std::size_t i = 0; i < p; ++i)
              simplex[s].x[i] = 0.5 * (simplex[s].x[i] + simplex.front().x[i]);
            simplex[s].f = objective(simplex[s].x);
          }
        }
      }
    }
    std::sort(simplex.begin(), simplex.end(),
              [](const SimplexPoint& a, const SimplexPoint& b) { return a.f < b.f; });
    winners.push_back(simplex.front().x);
  }

  // Compare restart winners under one fresh stream.
  StreamKey final_key{seed, StreamPurpose::optimizer, 1, 0xFFFFull};
  double best_val = std::numeric_limits<double>::infinity();
  Estimate best_est;
  for (const auto& w : winners) {
    const Estimate e = dual_transport(F, family.make(w), eng, n_mc, final_key);
    ++evals;
    if (e.value < best_val) {
      best_val = e.value;
      best_est = e;
      out.best_params = w;
    }
  }
  out.best = best_est;
  out.evaluations = evals;
  return out;
}

DualReport duality_report(const Functional& F, const ControlFamily& family,
                          const EnginePtr& eng, const DualityBudgets& budgets,
                          std::uint64_t seed) {
  DualReport rep;
  const Window inner = eng->plan().inner;
  const IntensityModel& model = eng->model();
  rep.lhs = variational_lhs(F, model, inner, budgets.n_lhs,
                            StreamKey{seed, StreamPurpose::simulate, 0, 1});
  rep.minimum = minimize_dual(F, family, *eng, budgets.n_dual, budgets.optimizer_budget,
                              budgets.restarts, seed);
  const Control best = family.make(rep.minimum.best_params);

  // Tilt form at the nested-MC optimal control.
  std::vector<double> knots;
  for (int i = 0; i <= budgets.grid_m; ++i)
    knots.push_back(static_cast<double>(i) / budgets.grid_m);
  std::shared_ptr<const IntensityModel> model_ptr(eng, &eng->model());
  const Control opt = optimal_control(F, model_ptr, inner, knots, family.mark_cells,
                                      family.support, budgets.n_inner, seed);
  rep.tilt_at_optimal = dual_tilt(F, opt, model, inner, budgets.n_dual,
                                  StreamKey{seed, StreamPurpose::simulate, 0, 2});

  // Transport form at the hat conjugate of the optimal control (candidate
  // minimizer in the transport form; no optimality claim).
  const Control hat = hat_control(eng, opt);
  rep.transport_at_hat = dual_transport(F, hat, *eng, std::max(budgets.n_dual / 4, 1000),
                                        StreamKey{seed, StreamPurpose::simulate, 0, 3});

  // Conjugation cross-check at the best family control.
  rep.eq_conjugation_left = dual_transport(F, best, *eng, budgets.n_dual,
                                           StreamKey{seed, StreamPurpose::simulate, 0, 4});
  const Control best_tilde = tilde_control(eng, best);
  rep.eq_conjugation_right = dual_tilt(F, best_tilde, model, inner, budgets.n_dual,
                                       StreamKey{seed, StreamPurpose::simulate, 0, 5});

  rep.gap = rep.minimum.best.value - rep.lhs.value;
  rep.gap_se = std::sqrt(sq(rep.minimum.best.se) + sq(rep.lhs.se));
  rep.weak_duality_ok = rep.gap >= -3.0 * rep.gap_se;
  rep.attained_ok = std::abs(rep.gap) <= 3.0 * rep.gap_se;

  auto push = [&rep](const std::string& q, const Estimate& e, double target, bool has_target,
                     bool pass) {
    rep.rows.push_back(DualityRow{q, e.value, e.se, target, has_target, pass});
  };
  push("lhs_neg_log_laplace", rep.lhs, 0.0, false, true);
  push("dual_transport_min", rep.minimum.best, rep.lhs.value, true, rep.attained_ok);
  push("dual_tilt_at_optimal_control", rep.tilt_at_optimal, rep.lhs.value, true,
       std::abs(rep.tilt_at_optimal.value - rep.lhs.value) <=
           3.0 * std::sqrt(sq(rep.tilt_at_optimal.se) + sq(rep.lhs.se)));
  push("dual_transport_at_hat_control", rep.transport_at_hat, 0.0, false, true);
  {
    const double diff = rep.eq_conjugation_left.value - rep.eq_conjugation_right.value;
    const double se =
        std::sqrt(sq(rep.eq_conjugation_left.se) + sq(rep.eq_conjugation_right.se));
    push("conjugation_cross_check_diff", Estimate{diff, se}, 0.0, true,
         std::abs(diff) <= 3.0 * se);
  }
  push("duality_gap", Estimate{rep.gap, rep.gap_se}, 0.0, true,
       rep.weak_duality_ok && rep.attained_ok);
  return rep;
}

}  // namespace plab

#pragma once

#include <optional>

#include "poissonlab/functionals.hpp"
#include "poissonlab/quadrature.hpp"
#include "poissonlab/stats.hpp"

namespace plab {

// Uniform time grid 0 = t_0 < ... < t_m = 1.
struct TimeGrid {
  std::vector<double> knots;
  static TimeGrid uniform(int m);
  std::size_t cells() const { return knots.size() - 1; }
  std::size_t cell_of(double t) const;
};

// Nested Monte Carlo estimator of the predictable projection of the
// difference field on one grid cell: the average over resimulated futures of
// the difference at (u, just after t_i), conditioned on the given past.
double predictable_projection(const Functional& F, const Mark& u, const TimeGrid& grid,
                              std::size_t cell, const Configuration& past,
                              const IntensityModel& model, const Window& win, int n_inner,
                              Rng& rng);

struct ProjectionField {
  // per cell, per mark-quadrature node
  std::vector<std::vector<double>> values;
  std::vector<std::vector<double>> std_errors;
  BoxRule mark_rule;  // weights exclude the density factor
};

struct ReconstructResult {
  double value = 0.0;              // E_hat F + martingale part
  double martingale_part = 0.0;    // point sums minus compensator
  double e_hat = 0.0;
};

class ProjectionEngine {
 public:
  ProjectionEngine(const Functional& F, std::optional<Cylindrical> cyl,
                   std::shared_ptr<const IntensityModel> model, Window sim_window,
                   TimeGrid grid, int n_inner, std::uint64_t seed, int gl_nodes = 16);

  // Shared-future nested MC over one cell: projection values at the given
  // marks, all futures reused across marks. Deterministic per (replicate,cell).
  std::vector<double> project_cell(std::size_t cell, const Configuration& past,
                                   const std::vector<Mark>& at, std::uint64_t replicate) const;

  // Martingale reconstruction of F(omega) with the past taken from omega.
  ReconstructResult reconstruct(const Configuration& omega, std::uint64_t replicate,
                                double e_hat) const;

  // Independent outer estimate of E F.
  Estimate outer_mean(int n) const;

  // Full projection field on the tensor mark grid (for reporting/oracles).
  ProjectionField field(const Configuration& omega, std::uint64_t replicate) const;

  Configuration simulate_outer(std::uint64_t replicate) const;
  double eval_functional(const Configuration& w) const { return F_.eval(w); }

  const TimeGrid& grid() const { return grid_; }
  const Window& window() const { return win_; }
  const BoxRule& mark_rule() const { return rule_; }
  std::uint64_t seed() const { return seed_; }

  // Nudge added to the cell time so the probing point never collides with
  // grid times or existing points.
  static constexpr double kTimeNudge = 0x1.0p-40;

 private:
  Functional F_;
  std::optional<Cylindrical> cyl_;
  std::shared_ptr<const IntensityModel> model_;
  Window win_;
  TimeGrid grid_;
  int n_inner_;
  std::uint64_t seed_;
  BoxRule rule_;
};

struct ResidualReport {
  double residual = 0.0;
  double se = 0.0;         // bootstrap
  double sd_F = 0.0;       // sample sd of F over the outer replicates
  double mart_mean = 0.0;  // sample mean of the martingale part
  double mart_mean_se = 0.0;
  Estimate e_hat;
  int n_outer = 0;
};

// RMS over outer configurations of F(omega) - reconstruct(omega).
ResidualReport residual(const ProjectionEngine& eng, int n_outer, int e_hat_n, int workers = 1);

}  // namespace plab

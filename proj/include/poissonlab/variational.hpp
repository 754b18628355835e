#pragma once

#include <span>

#include "poissonlab/girsanov.hpp"
#include "poissonlab/transport.hpp"

namespace plab {

// -log E e^{-F} by plain Monte Carlo with a delta-method standard error.
Estimate variational_lhs(const Functional& F, const IntensityModel& model, const Window& win,
                         int n, const StreamKey& base_key);

// Tilt-form dual objective E^{P_phi}(F + L(phi)), importance-sampling
// estimator under the base measure.
Estimate dual_tilt(const Functional& F, const Control& phi, const IntensityModel& model,
                   const Window& win, int n, const StreamKey& base_key);

// Transport-form dual objective E(F(Gamma^-_phi(omega)) + L(phi)(omega)) over
// configurations simulated on the padded window.
Estimate dual_transport(const Functional& F, const Control& phi, const TransportEngine& eng,
                        int n, const StreamKey& base_key);

// Parameter bounds for the control class used in the strong duality search.
double control_bound_alpha(double sup_norm);  // e^{-2||F||} - 1
double control_bound_beta(double sup_norm);   // 1 + e^{2||F||}

struct RatioEstimate {
  double value = 0.0;  // clipped
  double raw = 0.0;
  double se = 0.0;
};

// Nested-MC estimate of the optimal tilt at one cell: the conditional ratio
// of the difference of e^{-F} to its conditional mean, clipped to [alpha, beta].
RatioEstimate optimal_control_ratio(const Functional& F, const Mark& u, double t_left,
                                    const Configuration& past, const IntensityModel& model,
                                    const Window& win, int n_inner, Rng& rng, double alpha,
                                    double beta);

// The same ratios packaged as a past-dependent control on a time grid and a
// mark partition of the support. Cell values are deterministic functions of
// the past through a keyed stream.
Control optimal_control(const Functional& F, std::shared_ptr<const IntensityModel> model,
                        const Window& win, const std::vector<double>& time_knots,
                        const std::vector<Box>& mark_cells, const Box& support, int n_inner,
                        std::uint64_t seed);

// Piecewise-constant deterministic control family over a time grid and a
// mark partition; parameters are the cell values.
struct ControlFamily {
  std::vector<double> knots{0.0, 1.0};
  std::vector<Box> mark_cells;
  Box support;
  double lo = -0.5;
  double hi = 3.0;

  std::size_t param_count() const { return (knots.size() - 1) * mark_cells.size(); }
  Control make(std::span<const double> params) const;
};

struct MinimizeResult {
  std::vector<double> best_params;
  Estimate best;                 // re-evaluated objective at the best point
  std::vector<double> trace;     // best-so-far objective per iteration
  int evaluations = 0;
  bool converged = false;
};

// Derivative-free simplex search with restarts; all candidates within one
// restart share common random numbers so comparisons are low-variance.
MinimizeResult minimize_dual(const Functional& F, const ControlFamily& family,
                             const TransportEngine& eng, int n_mc, int budget, int restarts,
                             std::uint64_t seed);

struct DualityRow {
  std::string quantity;
  double estimate = 0.0;
  double se = 0.0;
  double target = 0.0;
  bool has_target = false;
  bool pass = true;
};

struct DualReport {
  Estimate lhs;
  MinimizeResult minimum;
  Estimate tilt_at_optimal;       // tilt form at the nested-MC optimal control
  Estimate transport_at_hat;      // transport form at hat(optimal control)
  Estimate eq_conjugation_left;   // transport form at the best family control
  Estimate eq_conjugation_right;  // tilt form at its tilde conjugate
  double gap = 0.0;               // minimum dual - lhs
  double gap_se = 0.0;
  bool weak_duality_ok = false;   // gap >= -3 se
  bool attained_ok = false;       // |gap| <= 3 se
  std::vector<DualityRow> rows;
};

struct DualityBudgets {
  int n_lhs = 20000;
  int n_dual = 20000;
  int optimizer_budget = 120;
  int restarts = 3;
  int n_inner = 400;
  int grid_m = 4;
};

DualReport duality_report(const Functional& F, const ControlFamily& family,
                          const EnginePtr& eng, const DualityBudgets& budgets,
                          std::uint64_t seed);

}  // namespace plab

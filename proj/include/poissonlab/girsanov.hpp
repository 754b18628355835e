#pragma once

#include "poissonlab/control.hpp"
#include "poissonlab/functionals.hpp"
#include "poissonlab/stats.hpp"

namespace plab {

// Stochastic exponential at t = 1 in point-sum form:
//   exp{ sum over points of log(1 + phi) - integral of phi d(pi) }.
// Requires all points inside `win` and the control support inside the window.
double doleans(const Control& phi, const Configuration& omega, const IntensityModel& model,
               const Window& win);

// Entropy cost L(phi): integral of (1+phi)log(1+phi) - phi against pi.
// For past-dependent controls the cost depends on omega.
double entropy_cost(const Control& phi, const Configuration* omega, const IntensityModel& model);

// A deterministic quadratic envelope: L(phi) <= C * integral of phi^2 d(pi)
// with C = max over [c0,c1] of entropy_integrand(x)/x^2.
double entropy_quadratic_constant(double c0, double c1);
double phi_squared_pi_integral(const Control& phi, const Configuration* omega,
                               const IntensityModel& model);

// Importance-sampling estimate under the base measure of the tilted
// expectation of F: mean of doleans(phi) * F over n simulated configurations.
Estimate tilted_expectation_is(const Functional& F, const Control& phi,
                               const IntensityModel& model, const Window& win, int n,
                               const StreamKey& base_key);

// Direct simulation with compensator (1 + phi) nu x dt, piece by piece:
// base points plus superposed extras where phi > 0, thinning where phi < 0.
Configuration simulate_tilted(const Control& phi, const IntensityModel& model, const Window& win,
                              Rng& extra_rng, Rng& base_rng);

Estimate tilted_expectation_direct(const Functional& F, const Control& phi,
                                   const IntensityModel& model, const Window& win, int n,
                                   const StreamKey& base_key);

// Tilted expectation of L(phi); reduces to the deterministic entropy cost for
// deterministic controls (returned with zero SE).
Estimate relative_entropy(const Control& phi, const IntensityModel& model, const Window& win,
                          int n, const StreamKey& base_key);

struct MartingaleShiftReport {
  Estimate is;      // E under the tilted measure via importance sampling
  Estimate direct;  // same, via direct tilted simulation
  bool pass = false;
};

// Verifies that the phi-shifted compensated integral of psi has mean zero
// under the tilted measure, with both estimators.
MartingaleShiftReport martingale_shift_check(const MarkTimeFunction& psi, const Control& phi,
                                             const IntensityModel& model, const Window& win,
                                             int n, const StreamKey& base_key);

}  // namespace plab

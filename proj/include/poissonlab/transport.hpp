#pragma once

#include <map>
#include <memory>
#include <mutex>

#include "poissonlab/control.hpp"
#include "poissonlab/functionals.hpp"

namespace plab {

// Signed cumulative mass along one axis, anchored at 0, with a dense node
// table for fast evaluation and inversion.
class AxisCumulative {
 public:
  AxisCumulative(std::function<double(double)> line_density, Interval domain,
                 std::vector<double> breaks, double mass_tol, int min_nodes = 192);

  double value(double x) const;
  // Solves value(y) == target by bisection bracketing plus secant refinement.
  // Throws BufferOverflowError when the target falls outside the domain.
  double inverse(double target) const;
  Interval domain() const { return domain_; }

 private:
  double local(double from, double to) const;
  std::function<double(double)> density_;
  Interval domain_;
  double tol_;
  std::vector<double> nodes_;
  std::vector<double> vals_;
};

// Mark-space transport along axis 0 for one realized weight psi = 1 + phi.
// forward pushes nu onto psi*nu (cumulative matching Psi(forward(x)) = Phi(x));
// inverse is its two-sided inverse. In d >= 2 the cumulatives integrate over
// the slab cross-section spanned between 0 and the remaining coordinates, and
// a map instance is specific to that slab.
class TransportMap {
 public:
  TransportMap(const IntensityModel& model, const RealizedWeight& weight, Interval domain,
               const Mark& slab_at, double mass_tol);

  double forward(double x) const { return weighted_.inverse(base_.value(x)); }
  double inverse(double x) const { return base_.inverse(weighted_.value(x)); }

 private:
  AxisCumulative base_;
  AxisCumulative weighted_;
};

// Padded simulation region: transported points relevant to the inner window
// can never be lost to truncation when padding >= the displacement bound.
struct BufferPlan {
  Window inner;
  std::array<double, 3> padding{0, 0, 0};
  Window padded() const { return Window{inner.marks.expanded(padding), inner.time}; }
};

// Per-axis displacement bound for the maps induced by the control.
std::array<double, 3> displacement_bound(const Control& phi, const IntensityModel& model);

enum class GammaDirection {
  minus,  // applies forward maps: a nu-Poisson configuration becomes (1+phi)nu in law
  plus,   // applies inverse maps
};

// Transport engine: owns the map cache and the padded-domain bookkeeping.
class TransportEngine {
 public:
  TransportEngine(std::shared_ptr<const IntensityModel> model, BufferPlan plan,
                  double mass_tol = 1e-10);

  const IntensityModel& model() const { return *model_; }
  const BufferPlan& plan() const { return plan_; }
  double mass_tol() const { return mass_tol_; }
  // Domain of map construction along axis 0 (padded window plus margin).
  Interval map_domain() const { return domain_; }

  // Map for one realized weight; cached for d = 1 and for repeated slabs.
  std::shared_ptr<const TransportMap> map_for(const RealizedWeight& weight,
                                              const Mark& at) const;

  // Pointwise transform of a configuration. Pasts are always taken from the
  // argument configuration itself.
  Configuration gamma_transform(const Control& phi, const Configuration& omega,
                                GammaDirection dir) const;

 private:
  std::shared_ptr<const IntensityModel> model_;
  BufferPlan plan_;
  double mass_tol_;
  Interval domain_;
  mutable std::mutex cache_mtx_;
  mutable std::map<std::vector<double>, std::shared_ptr<const TransportMap>> cache_;
};

using EnginePtr = std::shared_ptr<const TransportEngine>;

// Control conjugations. tilde satisfies
//   tilde(u,t,w) = phi(u,t, Gamma^+_{tilde(w)}(w)),
// hat satisfies
//   phi(u,t,w) = hat(u,t, Gamma^+_{phi(w)}(w)).
Control tilde_control(const EnginePtr& eng, const Control& phi);
Control hat_control(const EnginePtr& eng, const Control& phi);

// |integral of f(forward(u)) d(nu) - integral of f * psi d(nu)| computed by
// quadrature; the change of variables is done numerically by transporting
// quadrature nodes.
double pushforward_residual(const TransportEngine& eng, const RealizedWeight& weight,
                            const std::function<double(const Mark&)>& f, const Box& f_support,
                            double quad_tol = 1e-8);

struct H2Report {
  std::vector<double> forward_discrepancy;
  std::vector<double> inverse_discrepancy;
  bool decreasing = false;
  bool below_tol = false;
};

// Stability of the maps along a sequence of controls converging to `limit`:
// maximum map discrepancy over the sample marks, per sequence element.
H2Report h2_stability_check(const TransportEngine& eng, const std::vector<Control>& sequence,
                            const Control& limit, const std::vector<double>& sample_marks,
                            const std::vector<double>& sample_times, double tol);

}  // namespace plab

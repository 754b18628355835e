#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "poissonlab/common.hpp"
#include "poissonlab/rng.hpp"

namespace plab {

// Which half-lines of the first coordinate carry infinite mass (per slab).
enum class DivergenceClaim { none, positive_axis, negative_axis, both };

// A density-defined intensity measure on R^d, evaluable on declared windows.
// All operations are read-only after construction.
class IntensityModel {
 public:
  IntensityModel(int dim, std::function<double(const Mark&)> density, double density_floor,
                 std::vector<Box> declared_windows, DivergenceClaim claim, std::string name);

  int dim() const { return dim_; }
  const std::string& name() const { return name_; }
  double density_floor() const { return floor_; }
  DivergenceClaim claim() const { return claim_; }
  const std::vector<Box>& declared_windows() const { return declared_; }

  double density(const Mark& u) const { return density_(u); }
  bool declared(const Box& b) const;
  void require_declared(const Box& b) const;

  // Constant envelope >= sup of the density over the box. The catalog models
  // are radially monotone, so the closest point to the origin attains the sup.
  double sup_density(const Box& b) const;

  double quadrature_tol() const { return quad_tol_; }

 private:
  int dim_;
  std::function<double(const Mark&)> density_;
  double floor_;
  std::vector<Box> declared_;
  DivergenceClaim claim_;
  std::string name_;
  double quad_tol_ = 1e-9;
};

// nu(w.marks) * |w.time|
double window_mass(const IntensityModel& model, const Window& w);

// Spatial mass nu(box), no time factor.
double nu_mass(const IntensityModel& model, const Box& box);

// Integral of f against nu over the box.
double integrate_nu(const IntensityModel& model, const std::function<double(const Mark&)>& f,
                    const Box& box);

// Signed cumulative along `axis` from 0 to x of weight * density, integrated
// over the slab cross-section spanned between 0 and the remaining coordinates
// of `at`. weight may be null (treated as 1). Strictly increasing in x for
// positive weights.
double marginal_cumulative(const IntensityModel& model,
                           const std::function<double(const Mark&)>& weight, int axis,
                           const Mark& at, double x,
                           const std::vector<double>& axis_breaks = {});

// One mark distributed proportionally to the density restricted to the box.
Mark sample_mark(const IntensityModel& model, const Box& box, Rng& rng);

// Heuristic certificate for the declared divergence: doubles the slab length
// until its mass exceeds `threshold`. Returns false if the claim looks wrong.
bool spot_check_divergence(const IntensityModel& model, double threshold = 1e3,
                           int max_doublings = 40);

// Built-in catalog: "lebesgue", "exp_decay" (rate), "gaussian_bump" (sigma).
// The declared window must cover every region the experiment will touch.
std::shared_ptr<const IntensityModel> make_catalog_model(const std::string& name, double param,
                                                         int dim, const Box& declared);

}  // namespace plab

#pragma once

#include <functional>
#include <vector>

#include "poissonlab/configuration.hpp"
#include "poissonlab/intensity.hpp"

namespace plab {

// One constant-in-marks cell of a control piece. The value may consult the
// past configuration (restricted by the caller); vmin/vmax declare its range.
struct ControlCell {
  Box box;
  std::function<double(const Configuration& past)> value;
  double vmin = 0.0;
  double vmax = 0.0;

  static ControlCell constant(const Box& b, double v) {
    ControlCell c;
    c.box = b;
    c.value = [v](const Configuration&) { return v; };
    c.vmin = c.vmax = v;
    return c;
  }
};

struct ControlPiece {
  std::vector<ControlCell> cells;  // disjoint boxes; the field is 0 elsewhere
  bool past_dependent = false;
};

// A control field phi(u,t,omega): piecewise constant in time on
// (knots[i], knots[i+1]], piecewise constant in marks on disjoint boxes,
// with each piece consulting only the configuration restricted to the
// piece's left knot. Bounds c0 in (-1, 0], c1 > 0; support inside U0.
class Control {
 public:
  Control(std::vector<double> knots, std::vector<ControlPiece> pieces, double c0, double c1,
          Box support);

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<ControlPiece>& pieces() const { return pieces_; }
  double c0() const { return c0_; }
  double c1() const { return c1_; }
  const Box& support() const { return support_; }
  bool deterministic() const;

  std::size_t piece_count() const { return pieces_.size(); }
  std::size_t piece_index(double t) const;
  double piece_length(std::size_t i) const { return knots_[i + 1] - knots_[i]; }

  // phi(u, t, omega). The configuration is restricted internally to the
  // piece's left knot, so future points can never influence the value.
  double value(const Mark& u, double t, const Configuration& omega) const;

  // Realized cell values of piece i given the (already restricted) past.
  std::vector<double> realize(std::size_t i, const Configuration& past) const;

  static Control constant(double theta, const Box& support);

 private:
  std::vector<double> knots_;
  std::vector<ControlPiece> pieces_;
  double c0_, c1_;
  Box support_;
};

// Realized weight psi = 1 + phi for one piece: constants on disjoint boxes,
// 1 elsewhere.
struct RealizedWeight {
  std::vector<Box> boxes;
  std::vector<double> phi_values;

  double phi(const Mark& u) const {
    for (std::size_t k = 0; k < boxes.size(); ++k)
      if (boxes[k].contains(u)) return phi_values[k];
    return 0.0;
  }
  double psi(const Mark& u) const { return 1.0 + phi(u); }
  bool identity() const {
    for (double v : phi_values)
      if (v != 0.0) return false;
    return true;
  }
};

RealizedWeight realize_weight(const Control& c, std::size_t piece, const Configuration& omega);

// Entropy integrand (1+x)log(1+x) - x; nonnegative, zero only at x = 0.
double entropy_integrand(double x);

}  // namespace plab

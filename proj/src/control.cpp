#include "poissonlab/control.hpp"

#include <algorithm>
#include <cmath>

namespace plab {

Control::Control(std::vector<double> knots, std::vector<ControlPiece> pieces, double c0,
                 double c1, Box support)
    : knots_(std::move(knots)), pieces_(std::move(pieces)), c0_(c0), c1_(c1),
      support_(support) {
  if (knots_.size() < 2 || knots_.front() != 0.0 || knots_.back() != 1.0)
    throw ParameterError("Control: knots must run from 0 to 1");
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i)
    if (!(knots_[i] < knots_[i + 1])) throw ParameterError("Control: knots must increase");
  if (pieces_.size() + 1 != knots_.size())
    throw ParameterError("Control: need one piece per knot interval");
  if (!(c0_ > -1.0) || c0_ > 0.0 || !(c1_ > 0.0))
    throw ParameterError("Control: bounds must satisfy -1 < c0 <= 0 < c1");
  for (const ControlPiece& p : pieces_)
    for (const ControlCell& c : p.cells) {
      if (!support_.contains(c.box))
        throw ParameterError("Control: cell escapes the support window");
      if (c.vmin < c0_ - 1e-12 || c.vmax > c1_ + 1e-12)
        throw ParameterError("Control: declared cell range escapes [c0, c1]");
    }
}

bool Control::deterministic() const {
  for (const ControlPiece& p : pieces_)
    if (p.past_dependent) return false;
  return true;
}

std::size_t Control::piece_index(double t) const {
  // t in (knots[i], knots[i+1]]; t <= knots[1] maps to piece 0.
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i)
    if (t <= knots_[i + 1]) return i;
  return pieces_.size() - 1;
}

double Control::value(const Mark& u, double t, const Configuration& omega) const {
  if (!support_.contains(u)) return 0.0;
  const std::size_t i = piece_index(t);
  const Configuration past = omega.restrict_time(knots_[i]);
  double v = 0.0;
  for (const ControlCell& c : pieces_[i].cells)
    if (c.box.contains(u)) {
      v = c.value(past);
      break;
    }
  if (v < c0_ - 1e-12 || v > c1_ + 1e-12)
    throw ContractError("Control: realized value escaped [c0, c1]");
  return v;
}

std::vector<double> Control::realize(std::size_t i, const Configuration& past) const {
  std::vector<double> vals;
  vals.reserve(pieces_[i].cells.size());
  for (const ControlCell& c : pieces_[i].cells) {
    const double v = c.value(past);
    if (v < c0_ - 1e-12 || v > c1_ + 1e-12)
      throw ContractError("Control: realized value escaped [c0, c1]");
    vals.push_back(v);
  }
  return vals;
}

Control Control::constant(double theta, const Box& support) {
  ControlPiece piece;
  piece.cells = {ControlCell::constant(support, theta)};
  const double c0 = std::min(theta, 0.0);
  const double c1 = std::max(theta, 1e-9);
  return Control({0.0, 1.0}, {piece}, c0, c1, support);
}

RealizedWeight realize_weight(const Control& c, std::size_t piece, const Configuration& omega) {
  const Configuration past = omega.restrict_time(c.knots()[piece]);
  RealizedWeight w;
  const std::vector<double> vals = c.realize(piece, past);
  for (std::size_t k = 0; k < vals.size(); ++k) {
    w.boxes.push_back(c.pieces()[piece].cells[k].box);
    w.phi_values.push_back(vals[k]);
  }
  return w;
}

double entropy_integrand(double x) {
  if (x <= -1.0) throw ContractError("entropy_integrand: 1 + phi must stay positive");
  return (1.0 + x) * std::log1p(x) - x;
}

}  // namespace plab

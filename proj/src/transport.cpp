#include "poissonlab/transport.hpp"

#include <algorithm>
#include <cmath>

#include "poissonlab/quadrature.hpp"

namespace plab {

AxisCumulative::AxisCumulative(std::function<double(double)> line_density, Interval domain,
                               std::vector<double> breaks, double mass_tol, int min_nodes)
    : density_(std::move(line_density)), domain_(domain), tol_(mass_tol) {
  if (!(domain_.lo < domain_.hi)) throw ParameterError("AxisCumulative: empty domain");
  if (!domain_.contains(0.0))
    throw ParameterError("AxisCumulative: the domain must contain the anchor 0");
  std::vector<double> pts = {domain_.lo, domain_.hi, 0.0};
  for (double b : breaks)
    if (domain_.contains(b)) pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  // Refine so evaluation segments stay short.
  const double max_step = domain_.length() / static_cast<double>(min_nodes);
  nodes_.clear();
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    nodes_.push_back(pts[i]);
    const double len = pts[i + 1] - pts[i];
    const int k = static_cast<int>(std::ceil(len / max_step));
    for (int j = 1; j < k; ++j)
      nodes_.push_back(pts[i] + len * static_cast<double>(j) / static_cast<double>(k));
  }
  nodes_.push_back(pts.back());

  vals_.assign(nodes_.size(), 0.0);
  const std::size_t zero_idx = static_cast<std::size_t>(
      std::lower_bound(nodes_.begin(), nodes_.end(), 0.0) - nodes_.begin());
  const double seg_tol = tol_ / static_cast<double>(nodes_.size());
  for (std::size_t i = zero_idx; i + 1 < nodes_.size(); ++i)
    vals_[i + 1] = vals_[i] + integrate_1d(density_, nodes_[i], nodes_[i + 1], seg_tol);
  for (std::size_t i = zero_idx; i > 0; --i)
    vals_[i - 1] = vals_[i] - integrate_1d(density_, nodes_[i - 1], nodes_[i], seg_tol);
}

double AxisCumulative::local(double from, double to) const {
  return integrate_1d(density_, from, to, tol_ * 0.1);
}

double AxisCumulative::value(double x) const {
  if (x < domain_.lo - 1e-12 || x > domain_.hi + 1e-12)
    throw BufferOverflowError("AxisCumulative: evaluation outside the padded domain");
  x = std::clamp(x, domain_.lo, domain_.hi);
  const std::size_t k = static_cast<std::size_t>(
      std::upper_bound(nodes_.begin(), nodes_.end(), x) - nodes_.begin());
  if (k == 0) return vals_.front();
  return vals_[k - 1] + local(nodes_[k - 1], x);
}

double AxisCumulative::inverse(double target) const {
  if (target < vals_.front() - tol_ || target > vals_.back() + tol_)
    throw BufferOverflowError(
        "AxisCumulative: inverse target escapes the padded domain (insufficient padding)");
  const double t = std::clamp(target, vals_.front(), vals_.back());
  std::size_t k = static_cast<std::size_t>(
      std::upper_bound(vals_.begin(), vals_.end(), t) - vals_.begin());
  if (k == 0) k = 1;
  if (k == vals_.size()) k = vals_.size() - 1;
  double lo = nodes_[k - 1], hi = nodes_[k];
  double glo = vals_[k - 1] - t, ghi = vals_[k] - t;
  if (glo > 0.0 || ghi < 0.0) {  // guard against table slop at segment edges
    lo = domain_.lo;
    hi = domain_.hi;
    glo = vals_.front() - t;
    ghi = vals_.back() - t;
  }
  auto g = [&](double y) { return value(y) - t; };
  // A few bisection steps, then secant refinement on the mass residual.
  for (int it = 0; it < 8; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if (gm <= 0.0) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
      ghi = gm;
    }
  }
  double a = lo, b = hi, ga = glo, gb = ghi;
  for (int it = 0; it < 64; ++it) {
    if (std::abs(gb - ga) < 1e-300) break;
    double c = b - gb * (b - a) / (gb - ga);
    if (!(c > lo && c < hi)) c = 0.5 * (lo + hi);
    const double gc = g(c);
    if (std::abs(gc) <= tol_) return c;
    if (gc <= 0.0) {
      lo = c;
    } else {
      hi = c;
    }
    a = b;
    ga = gb;
    b = c;
    gb = gc;
    if (hi - lo < 1e-15 * std::max(1.0, std::abs(lo))) break;
  }
  return 0.5 * (lo + hi);
}

namespace {

std::function<double(double)> make_line_density(const IntensityModel& model,
                                                const RealizedWeight* weight, const Mark& at) {
  const int d = model.dim();
  if (d == 1) {
    if (!weight) return [&model](double s) { return model.density(mark1(s)); };
    const RealizedWeight w = *weight;
    const IntensityModel* m = &model;
    return [m, w](double s) {
      const Mark u = mark1(s);
      return w.psi(u) * m->density(u);
    };
  }
  Box slab;
  slab.dim = d - 1;
  for (int j = 1; j < d; ++j)
    slab.axes[j - 1] = Interval{std::min(at[j], 0.0), std::max(at[j], 0.0)};
  const IntensityModel* m = &model;
  if (!weight) {
    return [m, slab, d](double s) {
      if (slab.volume() == 0.0) return 0.0;
      return integrate_box(
          [&](const Mark& v) {
            Mark u{0, 0, 0};
            u[0] = s;
            for (int j = 1; j < d; ++j) u[j] = v[j - 1];
            return m->density(u);
          },
          slab, m->quadrature_tol());
    };
  }
  const RealizedWeight w = *weight;
  return [m, w, slab, d](double s) {
    if (slab.volume() == 0.0) return 0.0;
    return integrate_box(
        [&](const Mark& v) {
          Mark u{0, 0, 0};
          u[0] = s;
          for (int j = 1; j < d; ++j) u[j] = v[j - 1];
          return w.psi(u) * m->density(u);
        },
        slab, m->quadrature_tol());
  };
}

std::vector<double> axis_breaks_of(const RealizedWeight& w) {
  std::vector<double> breaks;
  for (const Box& b : w.boxes) {
    breaks.push_back(b.axes[0].lo);
    breaks.push_back(b.axes[0].hi);
  }
  return breaks;
}

}  // namespace

TransportMap::TransportMap(const IntensityModel& model, const RealizedWeight& weight,
                           Interval domain, const Mark& slab_at, double mass_tol)
    : base_(make_line_density(model, nullptr, slab_at), domain, axis_breaks_of(weight),
            mass_tol, model.dim() == 1 ? 192 : 64),
      weighted_(make_line_density(model, &weight, slab_at), domain, axis_breaks_of(weight),
                mass_tol, model.dim() == 1 ? 192 : 64) {}

std::array<double, 3> displacement_bound(const Control& phi, const IntensityModel& model) {
  double r = 0.0;
  for (std::size_t i = 0; i < phi.piece_count(); ++i) {
    double mass = 0.0;
    double vmax = 0.0;
    for (const ControlCell& c : phi.pieces()[i].cells) {
      const double amp = std::max(std::abs(c.vmin), std::abs(c.vmax));
      mass += amp * nu_mass(model, c.box);
      vmax = std::max(vmax, amp);
    }
    double piece_r;
    if (model.dim() == 1) {
      piece_r = mass / model.density_floor();
    } else {
      // Anchored-slab bound: the per-slab mass surplus scales with the slab
      // cross-section, leaving an axis-0 extent times sup/floor density ratio.
      piece_r = vmax * model.sup_density(phi.support()) / model.density_floor() *
                phi.support().axes[0].length();
    }
    r = std::max(r, piece_r);
  }
  return {r, 0.0, 0.0};
}

TransportEngine::TransportEngine(std::shared_ptr<const IntensityModel> model, BufferPlan plan,
                                 double mass_tol)
    : model_(std::move(model)), plan_(plan), mass_tol_(mass_tol) {
  const Interval padded = plan_.padded().marks.axes[0];
  const double margin = std::max(plan_.padding[0], 0.125 * std::max(1.0, padded.length()));
  domain_ = Interval{std::min(padded.lo - margin, 0.0), std::max(padded.hi + margin, 0.0)};
  Box dom_box = plan_.padded().marks;
  dom_box.axes[0] = domain_;
  model_->require_declared(dom_box);
}

std::shared_ptr<const TransportMap> TransportEngine::map_for(const RealizedWeight& weight,
                                                             const Mark& at) const {
  std::vector<double> key;
  key.reserve(weight.boxes.size() * 7 + 2);
  for (std::size_t k = 0; k < weight.boxes.size(); ++k) {
    const Box& b = weight.boxes[k];
    for (int i = 0; i < b.dim; ++i) {
      key.push_back(b.axes[i].lo);
      key.push_back(b.axes[i].hi);
    }
    key.push_back(weight.phi_values[k]);
  }
  for (int j = 1; j < model_->dim(); ++j) key.push_back(at[j]);
  {
    std::lock_guard<std::mutex> lk(cache_mtx_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  auto map = std::make_shared<const TransportMap>(*model_, weight, domain_, at, mass_tol_);
  std::lock_guard<std::mutex> lk(cache_mtx_);
  auto [it, inserted] = cache_.emplace(std::move(key), map);
  return it->second;
}

Configuration TransportEngine::gamma_transform(const Control& phi, const Configuration& omega,
                                               GammaDirection dir) const {
  std::vector<Point> out;
  out.reserve(omega.size());
  // Realized weights are fixed per piece given omega (pasts come from omega).
  std::vector<RealizedWeight> weights(phi.piece_count());
  std::vector<bool> identity(phi.piece_count());
  for (std::size_t i = 0; i < phi.piece_count(); ++i) {
    weights[i] = realize_weight(phi, i, omega);
    identity[i] = weights[i].identity();
  }
  for (const Point& p : omega.points()) {
    const std::size_t i = phi.piece_index(p.t);
    if (identity[i]) {
      out.push_back(p);
      continue;
    }
    const auto map = map_for(weights[i], p.u);
    Point q = p;
    q.u[0] = dir == GammaDirection::minus ? map->forward(p.u[0]) : map->inverse(p.u[0]);
    out.push_back(q);
  }
  return Configuration(std::move(out));
}

namespace {

Control conjugate_control(const EnginePtr& eng, const Control& phi, GammaDirection dir) {
  std::vector<ControlPiece> new_pieces;
  new_pieces.push_back(phi.pieces()[0]);  // first piece is unchanged
  for (std::size_t i = 1; i < phi.piece_count(); ++i) {
    const ControlPiece& orig = phi.pieces()[i];
    if (!orig.past_dependent) {
      new_pieces.push_back(orig);
      continue;
    }
    // Prefix of the conjugated control built so far.
    std::vector<double> pre_knots(phi.knots().begin(), phi.knots().begin() + i + 1);
    Control prefix = [&] {
      std::vector<ControlPiece> pp = new_pieces;
      std::vector<double> kk = pre_knots;
      if (kk.back() < 1.0) {
        kk.push_back(1.0);
        pp.push_back(ControlPiece{});
      }
      return Control(kk, pp, phi.c0(), phi.c1(), phi.support());
    }();
    auto prefix_ptr = std::make_shared<Control>(std::move(prefix));
    ControlPiece np;
    np.past_dependent = true;
    for (const ControlCell& cell : orig.cells) {
      ControlCell nc;
      nc.box = cell.box;
      nc.vmin = cell.vmin;
      nc.vmax = cell.vmax;
      auto inner = cell.value;
      nc.value = [eng, prefix_ptr, inner, dir](const Configuration& past) {
        return inner(eng->gamma_transform(*prefix_ptr, past, dir));
      };
      np.cells.push_back(std::move(nc));
    }
    new_pieces.push_back(std::move(np));
  }
  return Control(phi.knots(), new_pieces, phi.c0(), phi.c1(), phi.support());
}

}  // namespace

Control tilde_control(const EnginePtr& eng, const Control& phi) {
  return conjugate_control(eng, phi, GammaDirection::plus);
}

Control hat_control(const EnginePtr& eng, const Control& phi) {
  return conjugate_control(eng, phi, GammaDirection::minus);
}

double pushforward_residual(const TransportEngine& eng, const RealizedWeight& weight,
                            const std::function<double(const Mark&)>& f, const Box& f_support,
                            double quad_tol) {
  const IntensityModel& model = eng.model();
  const int d = model.dim();
  // Right-hand side: integral of f * psi d(nu) over the support of f.
  const double rhs = integrate_box(
      [&](const Mark& u) { return f(u) * weight.psi(u) * model.density(u); }, f_support,
      quad_tol * 0.25);

  // Left-hand side: integrate f(forward(u)) d(nu) over the padded window,
  // which covers the preimage of the support when the padding dominates the
  // displacement. The integrand localizes where forward(u) enters the support
  // of f, so the preimages of all edges are added as breakpoints; otherwise
  // the adaptive rule can step straight over the transported bump.
  const Interval dom = eng.plan().padded().marks.axes[0];
  std::vector<double> edges = axis_breaks_of(weight);
  edges.push_back(f_support.axes[0].lo);
  edges.push_back(f_support.axes[0].hi);
  auto with_preimages = [&](const TransportMap& map) {
    std::vector<double> breaks = edges;
    for (double e : edges) {
      try {
        breaks.push_back(map.inverse(e));
      } catch (const BufferOverflowError&) {
      }
    }
    return breaks;
  };
  double lhs = 0.0;
  if (d == 1) {
    const auto map = eng.map_for(weight, mark1(0.0));
    lhs = integrate_1d_split(
        [&](double s) { return f(mark1(map->forward(s))) * model.density(mark1(s)); }, dom.lo,
        dom.hi, with_preimages(*map), quad_tol * 0.25);
  } else {
    // Fix the remaining coordinates in the outer integral; one map per slab.
    Box outer;
    outer.dim = d - 1;
    for (int j = 1; j < d; ++j) outer.axes[j - 1] = f_support.axes[j];
    lhs = integrate_box(
        [&](const Mark& rest) {
          Mark at{0, 0, 0};
          for (int j = 1; j < d; ++j) at[j] = rest[j - 1];
          const auto map = eng.map_for(weight, at);
          return integrate_1d_split(
              [&](double s) {
                Mark u = at;
                u[0] = map->forward(s);
                Mark src = at;
                src[0] = s;
                return f(u) * model.density(src);
              },
              dom.lo, dom.hi, with_preimages(*map), quad_tol * 0.1);
        },
        outer, quad_tol * 0.25);
  }
  return std::abs(lhs - rhs);
}

H2Report h2_stability_check(const TransportEngine& eng, const std::vector<Control>& sequence,
                            const Control& limit, const std::vector<double>& sample_marks,
                            const std::vector<double>& sample_times, double tol) {
  H2Report rep;
  const Configuration empty;
  auto discrepancies = [&](const Control& c, const Control& ref) {
    double fwd = 0.0, inv = 0.0;
    for (double t : sample_times) {
      const std::size_t ic = c.piece_index(t);
      const std::size_t ir = ref.piece_index(t);
      const auto mc = eng.map_for(realize_weight(c, ic, empty), mark1(0.0));
      const auto mr = eng.map_for(realize_weight(ref, ir, empty), mark1(0.0));
      for (double x : sample_marks) {
        fwd = std::max(fwd, std::abs(mc->forward(x) - mr->forward(x)));
        inv = std::max(inv, std::abs(mc->inverse(x) - mr->inverse(x)));
      }
    }
    return std::make_pair(fwd, inv);
  };
  for (const Control& c : sequence) {
    const auto [fwd, inv] = discrepancies(c, limit);
    rep.forward_discrepancy.push_back(fwd);
    rep.inverse_discrepancy.push_back(inv);
  }
  rep.decreasing = true;
  for (std::size_t i = 0; i + 1 < rep.forward_discrepancy.size(); ++i) {
    if (rep.forward_discrepancy[i + 1] > rep.forward_discrepancy[i] + 1e-12 ||
        rep.inverse_discrepancy[i + 1] > rep.inverse_discrepancy[i] + 1e-12)
      rep.decreasing = false;
  }
  rep.below_tol = !rep.forward_discrepancy.empty() && rep.forward_discrepancy.back() <= tol &&
                  rep.inverse_discrepancy.back() <= tol;
  return rep;
}

}  // namespace plab

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "poissonlab/clark_ocone.hpp"

using namespace plab;

namespace {
std::shared_ptr<const IntensityModel> lebesgue1() {
  return make_catalog_model("lebesgue", 0.0, 1, Box::make1(-20, 20));
}
const Window win{Box::make1(0, 1), {0, 1}};

MarkTimeFunction coord_bump() { return bump_function(Box::make1(0, 1), 1.0); }

// Closed-form conditional projection for the square of a linear pairing:
// (2 (<f, past> + tail compensator) + f(u)) * f(u).
double quad_projection_oracle(const MarkTimeFunction& f, const Configuration& past, double t,
                              const Mark& u, const IntensityModel& model) {
  const double fpast = pairing(f, past);
  const double tail =
      (1.0 - t) * integrate_nu(model, [&](const Mark& v) { return f(v, t); }, f.support);
  const double fu = f(u, t);
  return (2.0 * (fpast + tail) + fu) * fu;
}
}  // namespace

TEST_CASE("time grid cells") {
  const TimeGrid g = TimeGrid::uniform(4);
  CHECK(g.cells() == 4);
  CHECK(g.cell_of(0.0) == 0);
  CHECK(g.cell_of(0.25) == 0);
  CHECK(g.cell_of(0.2500001) == 1);
  CHECK(g.cell_of(1.0) == 3);
}

TEST_CASE("projection of a linear functional is its integrand, exactly") {
  auto m = lebesgue1();
  const Cylindrical lin = linear_functional(coord_bump(), 100.0);
  const Functional F = lin.as_functional();
  const TimeGrid g = TimeGrid::uniform(8);
  Rng rng(StreamKey{61, StreamPurpose::inner, 0, 0});
  const Configuration past;
  const Mark u = mark1(0.37);
  const double got = predictable_projection(F, u, g, 3, past, *m, win, 16, rng);
  CHECK(got == doctest::Approx(coord_bump()(u, g.knots[3])).epsilon(1e-12));
}

TEST_CASE("projection of a constant is zero") {
  auto m = lebesgue1();
  Functional c;
  c.eval = [](const Configuration&) { return 2.5; };
  c.bound = 2.5;
  c.dep_marks = Box::make1(0, 1);
  const TimeGrid g = TimeGrid::uniform(4);
  Rng rng(StreamKey{62, StreamPurpose::inner, 0, 0});
  CHECK(predictable_projection(c, mark1(0.5), g, 1, Configuration(), *m, win, 8, rng) == 0.0);
}

TEST_CASE("projection of the quadratic matches the conditional expansion") {
  auto m = lebesgue1();
  const MarkTimeFunction f = coord_bump();
  const Cylindrical quad = quadratic_functional(f, 60.0, 90.0);
  const Functional F = quad.as_functional();
  const TimeGrid g = TimeGrid::uniform(8);
  const Configuration past({{mark1(0.4), 0.1}, {mark1(0.8), 0.3}});
  const Mark u = mark1(0.6);
  const std::size_t cell = 4;  // t = 0.5

  const int n_inner = 4000;
  Rng rng(StreamKey{63, StreamPurpose::inner, 0, 0});
  std::vector<double> samples;
  const Window future_win{win.marks, Interval{g.knots[cell], 1.0}};
  for (int j = 0; j < n_inner; ++j) {
    const Configuration fut = simulate(*m, future_win, rng);
    std::vector<Point> pts = past.points();
    pts.insert(pts.end(), fut.points().begin(), fut.points().end());
    const Configuration w(std::move(pts));
    samples.push_back(difference(F, u, g.knots[cell] + ProjectionEngine::kTimeNudge, w));
  }
  const Estimate e = mean_se(samples);
  const double oracle = quad_projection_oracle(f, past, g.knots[cell], u, *m);
  CHECK(std::abs(e.value - oracle) <= 3.0 * e.se);
}

TEST_CASE("projection estimates are bounded by twice the sup norm") {
  auto m = lebesgue1();
  const Cylindrical t = tanh_functional(coord_bump());
  const Functional F = t.as_functional();
  ProjectionEngine eng(F, t, m, win, TimeGrid::uniform(4), 32, 64);
  for (int rep = 0; rep < 10; ++rep) {
    const Configuration omega = eng.simulate_outer(static_cast<std::uint64_t>(rep));
    const ProjectionField field = eng.field(omega, static_cast<std::uint64_t>(rep));
    for (const auto& cell : field.values)
      for (double v : cell) CHECK(std::abs(v) <= 2.0 * F.bound + 1e-12);
  }
}

TEST_CASE("reconstruction of a linear functional is exact up to the mean term") {
  auto m = lebesgue1();
  const Cylindrical lin = linear_functional(coord_bump(), 100.0);
  const Functional F = lin.as_functional();
  ProjectionEngine eng(F, lin, m, win, TimeGrid::uniform(8), 8, 71);
  const Estimate e_hat = eng.outer_mean(20000);
  for (int rep = 0; rep < 20; ++rep) {
    const Configuration omega = eng.simulate_outer(static_cast<std::uint64_t>(rep));
    const ReconstructResult rec =
        eng.reconstruct(omega, static_cast<std::uint64_t>(rep), e_hat.value);
    CHECK(std::abs(F.eval(omega) - rec.value) <= 3.0 * e_hat.se);
  }
}

TEST_CASE("reconstruction of a constant has no martingale part") {
  auto m = lebesgue1();
  Functional c;
  c.eval = [](const Configuration&) { return 1.25; };
  c.bound = 1.25;
  c.dep_marks = Box::make1(0, 1);
  ProjectionEngine eng(c, std::nullopt, m, win, TimeGrid::uniform(4), 8, 72);
  const Configuration omega = eng.simulate_outer(0);
  const ReconstructResult rec = eng.reconstruct(omega, 0, 1.25);
  CHECK(rec.martingale_part == doctest::Approx(0.0));
  CHECK(rec.value == doctest::Approx(1.25));
}

TEST_CASE("residual report: quadratic functional converges with the grid") {
  auto m = lebesgue1();
  const MarkTimeFunction f = bump_function(Box::make1(0, 2), 1.0);
  const Cylindrical quad = quadratic_functional(f, 60.0, 90.0);
  const Functional F = quad.as_functional();
  const Window w2{Box::make1(0, 2), {0, 1}};

  ProjectionEngine coarse(F, quad, m, w2, TimeGrid::uniform(4), 64, 73);
  ProjectionEngine fine(F, quad, m, w2, TimeGrid::uniform(16), 64, 73);
  const ResidualReport rc = residual(coarse, 160, 4000, 2);
  const ResidualReport rf = residual(fine, 160, 4000, 2);

  CHECK(rf.residual <= rc.residual + 2.0 * std::sqrt(sq(rc.se) + sq(rf.se)));
  CHECK(std::abs(rc.mart_mean) <= 4.0 * rc.mart_mean_se);
  CHECK(std::abs(rf.mart_mean) <= 4.0 * rf.mart_mean_se);
  CHECK(rf.residual < 0.2 * rf.sd_F);
}

TEST_CASE("residual report: linear functional leaves only mean-term noise") {
  auto m = lebesgue1();
  const Cylindrical lin = linear_functional(coord_bump(), 100.0);
  const Functional F = lin.as_functional();
  ProjectionEngine eng(F, lin, m, win, TimeGrid::uniform(8), 8, 74);
  const ResidualReport r = residual(eng, 100, 20000, 2);
  CHECK(r.residual <= 3.0 * r.e_hat.se + 1e-12);
}

TEST_CASE("second moment of the projection energy is stable under doubling") {
  auto m = lebesgue1();
  const Cylindrical quad = quadratic_functional(coord_bump(), 60.0, 90.0);
  const Functional F = quad.as_functional();
  ProjectionEngine eng(F, quad, m, win, TimeGrid::uniform(4), 32, 75);
  auto energy_sq = [&](int n_outer) {
    std::vector<double> qs;
    for (int rep = 0; rep < n_outer; ++rep) {
      const Configuration omega = eng.simulate_outer(static_cast<std::uint64_t>(rep));
      const ProjectionField field = eng.field(omega, static_cast<std::uint64_t>(rep));
      double q = 0.0;
      for (std::size_t c = 0; c < field.values.size(); ++c) {
        double cell_int = 0.0;
        for (std::size_t j = 0; j < field.mark_rule.nodes.size(); ++j)
          cell_int += field.mark_rule.weights[j] * sq(field.values[c][j]);
        q += cell_int * (eng.grid().knots[c + 1] - eng.grid().knots[c]);
      }
      qs.push_back(q * q);
    }
    return mean_se(qs);
  };
  const Estimate a = energy_sq(60);
  const Estimate b = energy_sq(120);
  CHECK(std::isfinite(a.value));
  CHECK(std::isfinite(b.value));
  CHECK(std::abs(a.value - b.value) <= 3.0 * std::sqrt(sq(a.se) + sq(b.se)));
}

TEST_CASE("inner sample count below two is rejected") {
  auto m = lebesgue1();
  const Cylindrical lin = linear_functional(coord_bump(), 100.0);
  Rng rng(StreamKey{76, StreamPurpose::inner, 0, 0});
  CHECK_THROWS_AS(predictable_projection(lin.as_functional(), mark1(0.5), TimeGrid::uniform(4),
                                         0, Configuration(), *m, win, 1, rng),
                  ParameterError);
}

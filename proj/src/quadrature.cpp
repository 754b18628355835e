#include "poissonlab/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace plab {

namespace {

double simpson(double fa, double fm, double fb, double h) { return h * (fa + 4.0 * fm + fb) / 6.0; }

double adaptive(const std::function<double(double)>& f, double a, double b, double fa, double fm,
                double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(fa, flm, fm, m - a);
  const double right = simpson(fm, frm, fb, b - m);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate_1d(const std::function<double(double)>& f, double a, double b, double tol) {
  if (a == b) return 0.0;
  double sign = 1.0;
  if (b < a) {
    std::swap(a, b);
    sign = -1.0;
  }
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = simpson(fa, fm, fb, b - a);
  return sign * adaptive(f, a, b, fa, fm, fb, whole, tol, 48);
}

double integrate_1d_split(const std::function<double(double)>& f, double a, double b,
                          const std::vector<double>& breaks, double tol) {
  if (a == b) return 0.0;
  double sign = 1.0;
  if (b < a) {
    std::swap(a, b);
    sign = -1.0;
  }
  std::vector<double> pts;
  pts.push_back(a);
  for (double x : breaks)
    if (x > a && x < b) pts.push_back(x);
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  double total = 0.0;
  const double per = tol / static_cast<double>(pts.size());
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    total += integrate_1d(f, pts[i], pts[i + 1], per);
  return sign * total;
}

double integrate_box(const std::function<double(const Mark&)>& f, const Box& box, double tol) {
  if (box.dim == 1) {
    return integrate_1d([&](double x) { return f(mark1(x)); }, box.axes[0].lo, box.axes[0].hi,
                        tol);
  }
  if (box.dim == 2) {
    const double len = std::max(box.axes[0].length(), 1e-12);
    return integrate_1d(
        [&](double x) {
          return integrate_1d([&](double y) { return f(mark2(x, y)); }, box.axes[1].lo,
                              box.axes[1].hi, tol / (4.0 * len));
        },
        box.axes[0].lo, box.axes[0].hi, tol);
  }
  if (box.dim == 3) {
    const double len0 = std::max(box.axes[0].length(), 1e-12);
    const double len1 = std::max(box.axes[1].length(), 1e-12);
    return integrate_1d(
        [&](double x) {
          return integrate_1d(
              [&](double y) {
                return integrate_1d([&](double z) { return f(mark3(x, y, z)); }, box.axes[2].lo,
                                    box.axes[2].hi, tol / (16.0 * len0 * len1));
              },
              box.axes[1].lo, box.axes[1].hi, tol / (4.0 * len0));
        },
        box.axes[0].lo, box.axes[0].hi, tol);
  }
  throw ParameterError("integrate_box: dimension must be 1, 2 or 3");
}

namespace {
// 16-point Gauss-Legendre abscissas/weights on [-1,1] (positive half).
const double kGL16x[8] = {0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
                          0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
                          0.9445750230732326, 0.9894009349916499};
const double kGL16w[8] = {0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
                          0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
                          0.0622535239386479, 0.0271524594117541};
const double kGL8x[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                         0.9602898564975363};
const double kGL8w[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                         0.1012285362903763};
const double kGL4x[2] = {0.3399810435848563, 0.8611363115940526};
const double kGL4w[2] = {0.6521451548625461, 0.3478548451374538};
}  // namespace

GaussRule gauss_legendre(int n, double a, double b) {
  const double* xs = nullptr;
  const double* ws = nullptr;
  int half = 0;
  if (n == 16) {
    xs = kGL16x;
    ws = kGL16w;
    half = 8;
  } else if (n == 8) {
    xs = kGL8x;
    ws = kGL8w;
    half = 4;
  } else if (n == 4) {
    xs = kGL4x;
    ws = kGL4w;
    half = 2;
  } else {
    throw ParameterError("gauss_legendre: supported sizes are 4, 8, 16");
  }
  GaussRule r;
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  for (int i = half - 1; i >= 0; --i) {
    r.nodes.push_back(c - h * xs[i]);
    r.weights.push_back(h * ws[i]);
  }
  for (int i = 0; i < half; ++i) {
    r.nodes.push_back(c + h * xs[i]);
    r.weights.push_back(h * ws[i]);
  }
  return r;
}

BoxRule gauss_box(int n_per_axis, const Box& box) {
  BoxRule out;
  std::array<GaussRule, 3> per;
  for (int i = 0; i < box.dim; ++i)
    per[i] = gauss_legendre(n_per_axis, box.axes[i].lo, box.axes[i].hi);
  if (box.dim == 1) {
    for (std::size_t i = 0; i < per[0].nodes.size(); ++i) {
      out.nodes.push_back(mark1(per[0].nodes[i]));
      out.weights.push_back(per[0].weights[i]);
    }
    return out;
  }
  if (box.dim == 2) {
    for (std::size_t i = 0; i < per[0].nodes.size(); ++i)
      for (std::size_t j = 0; j < per[1].nodes.size(); ++j) {
        out.nodes.push_back(mark2(per[0].nodes[i], per[1].nodes[j]));
        out.weights.push_back(per[0].weights[i] * per[1].weights[j]);
      }
    return out;
  }
  for (std::size_t i = 0; i < per[0].nodes.size(); ++i)
    for (std::size_t j = 0; j < per[1].nodes.size(); ++j)
      for (std::size_t k = 0; k < per[2].nodes.size(); ++k) {
        out.nodes.push_back(mark3(per[0].nodes[i], per[1].nodes[j], per[2].nodes[k]));
        out.weights.push_back(per[0].weights[i] * per[1].weights[j] * per[2].weights[k]);
      }
  return out;
}

}  // namespace plab

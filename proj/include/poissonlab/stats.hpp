#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "poissonlab/rng.hpp"

namespace plab {

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

inline double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

inline double variance_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

inline Estimate mean_se(const std::vector<double>& xs) {
  Estimate e;
  e.value = mean_of(xs);
  e.se = xs.size() > 1 ? std::sqrt(variance_of(xs) / static_cast<double>(xs.size())) : 0.0;
  return e;
}

// -log(mean(xs)) with delta-method standard error.
inline Estimate neg_log_mean(const std::vector<double>& xs) {
  const Estimate m = mean_se(xs);
  Estimate e;
  e.value = -std::log(m.value);
  e.se = m.se / m.value;
  return e;
}

inline double sample_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean_of(a), mb = mean_of(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Bootstrap SE of sqrt(mean(squares)).
inline double bootstrap_se_rms(const std::vector<double>& squares, std::uint64_t seed,
                               int n_boot = 200) {
  if (squares.size() < 2) return 0.0;
  Rng rng(StreamKey{seed, StreamPurpose::bootstrap, 0, 0});
  std::vector<double> reps;
  reps.reserve(n_boot);
  const std::size_t n = squares.size();
  for (int b = 0; b < n_boot; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      s += squares[static_cast<std::size_t>(rng.uniform01() * static_cast<double>(n))];
    reps.push_back(std::sqrt(s / static_cast<double>(n)));
  }
  return std::sqrt(variance_of(reps));
}

}  // namespace plab

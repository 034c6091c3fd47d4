#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace muxsim {

struct NelderMeadOptions {
  int max_iterations = 5000;
  double f_tolerance = 1e-15;  // relative spread of simplex values
  double x_tolerance = 1e-12;  // simplex diameter
  std::vector<double> initial_step;  // per coordinate; default 5% of |x0| (or 0.00025)
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

/// Minimize f over R^n with the standard simplex moves (1, 2, 0.5, 0.5).
/// Non-finite objective values are treated as +inf.
template <class F>
NelderMeadResult nelder_mead(F&& f, const std::vector<double>& x0, const NelderMeadOptions& opt = {}) {
  const std::size_t n = x0.size();
  auto eval = [&](const std::vector<double>& x) {
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<std::vector<double>> pts(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) {
    double step = i < opt.initial_step.size() ? opt.initial_step[i] : 0.05 * std::abs(x0[i]);
    if (step == 0.0) step = 0.00025;
    pts[i + 1][i] += step;
  }
  std::vector<double> vals(n + 1);
  for (std::size_t i = 0; i <= n; ++i) vals[i] = eval(pts[i]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);
  NelderMeadResult res;

  auto blend = [&](const std::vector<double>& from, const std::vector<double>& to, double t, std::vector<double>& out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = from[i] + t * (to[i] - from[i]);
  };

  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];

    double diameter = 0.0;
    for (std::size_t k = 1; k <= n; ++k)
      for (std::size_t i = 0; i < n; ++i) diameter = std::max(diameter, std::abs(pts[order[k]][i] - pts[best][i]));
    const double spread = vals[worst] - vals[best];
    const bool flat = std::isfinite(spread) && spread <= opt.f_tolerance * (std::abs(vals[best]) + 1e-300);
    if ((flat && diameter <= opt.x_tolerance) || diameter <= 1e-3 * opt.x_tolerance) {
      res.converged = std::isfinite(vals[best]);
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i) centroid[i] += pts[order[k]][i] / static_cast<double>(n);

    blend(centroid, pts[worst], -1.0, trial);
    const double fr = eval(trial);
    if (fr < vals[best]) {
      blend(centroid, pts[worst], -2.0, trial2);
      const double fe = eval(trial2);
      if (fe < fr) {
        pts[worst] = trial2;
        vals[worst] = fe;
      } else {
        pts[worst] = trial;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = trial;
      vals[worst] = fr;
      continue;
    }
    // Contraction: outside if the reflection improved on the worst, inside otherwise.
    const bool outside = fr < vals[worst];
    blend(centroid, outside ? trial : pts[worst], 0.5, trial2);
    const double fc = eval(trial2);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = trial2;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t k = 1; k <= n; ++k) {
      blend(pts[best], pts[order[k]], 0.5, pts[order[k]]);
      vals[order[k]] = eval(pts[order[k]]);
    }
  }

  const auto best_it = std::min_element(vals.begin(), vals.end());
  res.x = pts[static_cast<std::size_t>(best_it - vals.begin())];
  res.value = *best_it;
  res.iterations = it;
  return res;
}

}  // namespace muxsim

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace trafficfc {

/// Result of a simplex minimization. `trace` holds the best objective value
/// after every accepted improvement, so callers can assert monotonicity.
struct NelderMeadResult {
  std::vector<double> x;
  double fx = 0.0;
  int iterations = 0;
  std::vector<double> trace;
};

/// Derivative-free Nelder-Mead minimizer. The objective may return +inf for
/// infeasible points; such vertices are simply treated as worst. Stops when
/// the simplex's objective spread falls below `ftol` (relative to the best
/// value) or after `max_iter` iterations.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    std::vector<double> x0, double step, double ftol,
                                    int max_iter) {
  const std::size_t n = x0.size();
  std::vector<std::vector<double>> xs(n + 1, x0);
  std::vector<double> fs(n + 1);
  for (std::size_t i = 0; i < n; ++i) xs[i + 1][i] += step;
  for (std::size_t i = 0; i <= n; ++i) fs[i] = f(xs[i]);

  NelderMeadResult res;
  auto order = [&] {
    std::vector<std::size_t> idx(n + 1);
    for (std::size_t i = 0; i <= n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
    std::vector<std::vector<double>> xs2;
    std::vector<double> fs2;
    for (std::size_t i : idx) {
      xs2.push_back(xs[i]);
      fs2.push_back(fs[i]);
    }
    xs = std::move(xs2);
    fs = std::move(fs2);
  };
  order();
  res.trace.push_back(fs[0]);

  for (int iter = 0; iter < max_iter; ++iter) {
    res.iterations = iter + 1;
    if (std::isfinite(fs[0]) && std::isfinite(fs[n]) &&
        fs[n] - fs[0] <= ftol * (1.0 + std::abs(fs[0])))
      break;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) centroid[j] += xs[i][j] / static_cast<double>(n);

    auto blend = [&](double coef) {
      std::vector<double> p(n);
      for (std::size_t j = 0; j < n; ++j) p[j] = centroid[j] + coef * (xs[n][j] - centroid[j]);
      return p;
    };

    auto reflected = blend(-1.0);
    const double fr = f(reflected);
    if (fr < fs[0]) {
      auto expanded = blend(-2.0);
      const double fe = f(expanded);
      if (fe < fr) {
        xs[n] = expanded;
        fs[n] = fe;
      } else {
        xs[n] = reflected;
        fs[n] = fr;
      }
    } else if (fr < fs[n - 1]) {
      xs[n] = reflected;
      fs[n] = fr;
    } else {
      auto contracted = blend(fr < fs[n] ? -0.5 : 0.5);
      const double fc = f(contracted);
      if (fc < std::min(fr, fs[n])) {
        xs[n] = contracted;
        fs[n] = fc;
      } else {
        // Shrink toward the best vertex.
        for (std::size_t i = 1; i <= n; ++i) {
          for (std::size_t j = 0; j < n; ++j) xs[i][j] = xs[0][j] + 0.5 * (xs[i][j] - xs[0][j]);
          fs[i] = f(xs[i]);
        }
      }
    }
    order();
    if (fs[0] < res.trace.back()) res.trace.push_back(fs[0]);
  }
  res.x = xs[0];
  res.fx = fs[0];
  return res;
}

}  // namespace trafficfc

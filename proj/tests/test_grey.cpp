#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "trafficfc/errors.hpp"
#include "trafficfc/grey.hpp"
#include "trafficfc/rng.hpp"

using namespace trafficfc;

namespace {

// Independent ordinary-least-squares oracle for y = c0 + c1*u, solved with
// the closed-form centred equations rather than the library's path.
struct Line {
  double intercept, slope;
};
Line ols_line(const std::vector<double>& u, const std::vector<double>& y) {
  const std::size_t n = u.size();
  double mu = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mu += u[i];
    my += y[i];
  }
  mu /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (u[i] - mu) * (y[i] - my);
    sxx += (u[i] - mu) * (u[i] - mu);
  }
  const double slope = sxy / sxx;
  return {my - slope * mu, slope};
}

// Two-parameter no-intercept oracle for y = c1*u + c2*v via 2x2 normal
// equations solved by Cramer's rule.
struct Pair2 {
  double c1, c2;
};
Pair2 ols_two(const std::vector<double>& u, const std::vector<double>& v,
              const std::vector<double>& y) {
  double suu = 0, suv = 0, svv = 0, suy = 0, svy = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    suu += u[i] * u[i];
    suv += u[i] * v[i];
    svv += v[i] * v[i];
    suy += u[i] * y[i];
    svy += v[i] * y[i];
  }
  const double det = suu * svv - suv * suv;
  return {(suy * svv - svy * suv) / det, (suu * svy - suv * suy) / det};
}

std::vector<double> logistic_sequence(double a, double b, double x1, int n) {
  // x0(k) sampled from the logistic accumulated response: x0(k) = x1(k) - x1(k-1).
  // Saturating growth toward a/b needs a < 0 and b < 0 in this convention.
  auto x1hat = [&](int j) { return a * x1 / (b * x1 + (a - b * x1) * std::exp(a * (j - 1))); };
  std::vector<double> x0(n);
  for (int k = 1; k <= n; ++k) x0[k - 1] = x1hat(k) - (k == 1 ? 0.0 : x1hat(k - 1));
  return x0;
}

}  // namespace

TEST_CASE("ago and mean_sequence match their definitions") {
  std::vector<double> x0 = {8, 4, 2, 1};
  auto x1 = ago(x0);
  REQUIRE(x1.size() == 4);
  CHECK(x1[0] == 8.0);
  CHECK(x1[1] == 12.0);
  CHECK(x1[2] == 14.0);
  CHECK(x1[3] == 15.0);
  auto z1 = mean_sequence(x1);
  REQUIRE(z1.size() == 3);  // defined for k = 2..n
  CHECK(z1[0] == 10.0);
  CHECK(z1[1] == 13.0);
  CHECK(z1[2] == 14.5);
}

TEST_CASE("GM(1,1) on a geometric window recovers the closed-form parameters") {
  GreyWindow w{{8, 4, 2, 1}};
  auto fit = fit_gm11(w);
  // Ratio r = 1/2: development coefficient 2(1-r)/(1+r) = 2/3, input 2*x1/(1+r).
  CHECK(fit.a == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(fit.b == doctest::Approx(32.0 / 3.0).epsilon(1e-12));
  const double expect = (1.0 - std::exp(fit.a)) * (8.0 - fit.b / fit.a) * std::exp(-fit.a * 4.0);
  CHECK(predict_gm11(fit, 4) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(predict_gm11(fit, 4) == doctest::Approx(0.526796).epsilon(1e-4));
}

TEST_CASE("GM(1,1) development coefficient follows 2(1-r)/(1+r) for geometric windows") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    const double r = 0.5 + 0.8 * uniform01(gen);  // contraction or mild growth
    const double x1 = 1.0 + 99.0 * uniform01(gen);
    const int n = 4 + static_cast<int>(uniform01(gen) * 5);
    std::vector<double> vals;
    double v = x1;
    for (int i = 0; i < n; ++i) {
      vals.push_back(v);
      v *= r;
    }
    auto fit = fit_gm11(GreyWindow{vals});
    CHECK(fit.a == doctest::Approx(2.0 * (1.0 - r) / (1.0 + r)).epsilon(1e-9));
    CHECK(fit.b == doctest::Approx(2.0 * x1 / (1.0 + r)).epsilon(1e-9));
  }
}

TEST_CASE("GM(1,1) matches an independent least-squares oracle on random windows") {
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 4 + static_cast<int>(uniform01(gen) * 8);
    std::vector<double> vals;
    for (int i = 0; i < n; ++i) vals.push_back(1.0 + 80.0 * uniform01(gen));
    auto x1 = ago(vals);
    auto z1 = mean_sequence(x1);
    std::vector<double> u, y(vals.begin() + 1, vals.end());
    for (double z : z1) u.push_back(-z);  // regression x0(k) = b + a*(-z1(k))
    auto line = ols_line(u, y);
    auto fit = fit_gm11(GreyWindow{vals});
    CHECK(fit.a == doctest::Approx(line.slope).epsilon(1e-9));
    CHECK(fit.b == doctest::Approx(line.intercept).epsilon(1e-9));
  }
}

TEST_CASE("GM(1,1) constant windows forecast the constant and tiny |a| is safe") {
  auto fit = fit_gm11(GreyWindow{{42.5, 42.5, 42.5, 42.5}});
  CHECK(fit.a == 0.0);
  CHECK(fit.b == 42.5);
  CHECK(predict_gm11(fit, 4) == 42.5);  // near-zero development: forecast is b
  GreyFit tiny{GreyVariant::gm11, 1e-12, 7.0, 7.0};
  CHECK(predict_gm11(tiny, 10) == 7.0);
  CHECK(std::isfinite(predict_gm11(tiny, 1000)));
}

TEST_CASE("grey window validation") {
  CHECK_THROWS_AS(fit_gm11(GreyWindow{{1, 2, 3}}), config_error);       // w >= 4
  CHECK_THROWS_AS(fit_gm11(GreyWindow{{1, 2, -3, 4}}), data_error);     // positivity
  CHECK_THROWS_AS(fit_gm11(GreyWindow{{1, 2, 0, 4}}), data_error);
  CHECK_THROWS_AS(fit_gvm(GreyWindow{{1, 2, 3}}), config_error);
}

TEST_CASE("Verhulst fit matches the two-parameter least-squares oracle") {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 5 + static_cast<int>(uniform01(gen) * 6);
    std::vector<double> vals;
    for (int i = 0; i < n; ++i) vals.push_back(1.0 + 50.0 * uniform01(gen));
    auto x1 = ago(vals);
    auto z1 = mean_sequence(x1);
    std::vector<double> u, v, y(vals.begin() + 1, vals.end());
    for (double z : z1) {
      u.push_back(-z);         // coefficient a
      v.push_back(z * z);      // coefficient b
    }
    auto oracle = ols_two(u, v, y);
    auto fit = fit_gvm(GreyWindow{vals});
    CHECK(fit.a == doctest::Approx(oracle.c1).epsilon(1e-7));
    CHECK(fit.b == doctest::Approx(oracle.c2).epsilon(1e-7));
  }
}

TEST_CASE("Verhulst forecast recovers logistic-generated data") {
  // Data generated from the model's own accumulated response: the fit uses
  // the trapezoidal mean sequence, so recovery is close but not exact.
  const double a = -0.5, b = -0.01, x1 = 3.0;  // saturation a/b = 50
  auto x0 = logistic_sequence(a, b, x1, 9);
  for (double v : x0) REQUIRE(v > 0.0);  // bell-shaped and positive
  std::vector<double> window(x0.begin(), x0.begin() + 8);
  auto fit = fit_gvm(GreyWindow{window});
  CHECK(fit.a / fit.b == doctest::Approx(a / b).epsilon(0.05));  // saturation level
  for (int k = 1; k <= 8; ++k) {
    const double target = k < 8 ? window[k] : x0[8];
    CHECK(predict_gvm(fit, k) == doctest::Approx(target).epsilon(0.05));
  }
}

TEST_CASE("Verhulst differencing matches the closed accumulated form") {
  // Forecast at k must equal x1hat(k+1) - x1hat(k) with x1hat from the
  // closed logistic response anchored at the first window value.
  GreyWindow w{{5.0, 6.5, 7.2, 7.0, 6.1}};
  auto fit = fit_gvm(w);
  auto x1hat = [&](int j) {
    if (j <= 1) return w.values[0];
    const double x1 = w.values[0];
    return fit.a * x1 / (fit.b * x1 + (fit.a - fit.b * x1) * std::exp(fit.a * (j - 1)));
  };
  for (int k = 1; k <= 6; ++k)
    CHECK(predict_gvm(fit, k) == doctest::Approx(x1hat(k + 1) - x1hat(k)).epsilon(1e-10));
}

TEST_CASE("Verhulst with b = 0 degenerates to the GM(1,1) exponential response") {
  // When the quadratic term vanishes the logistic response collapses to
  // x1hat(k) = x1 * exp(-a (k-1)), the b = 0 exponential solution.
  GreyFit fit{GreyVariant::gvm, 0.3, 0.0, 4.0};
  for (int k = 1; k <= 5; ++k) {
    const double expect = 4.0 * (std::exp(-0.3 * k) - std::exp(-0.3 * (k - 1)));
    CHECK(predict_gvm(fit, k) == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("Fourier correction: zero residuals produce zero coefficients") {
  std::vector<double> eps(10, 0.0);
  auto corr = fit_fourier(eps);
  for (double c : corr.coefficients) CHECK(c == doctest::Approx(0.0).epsilon(1e-12));
  for (int k = 2; k <= 11; ++k) CHECK(corr.evaluate(k) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("Fourier correction reproduces a single in-band harmonic exactly") {
  // Residuals on one harmonic of the fitted period are inside the model
  // space, so the least-squares fit is exact.
  const int L = 10;  // T = 10, harmonics z = 4
  std::vector<double> eps(L);
  for (int i = 0; i < L; ++i) {
    const int k = i + 2;
    eps[i] = 1.7 * std::cos(2.0 * std::numbers::pi * 2.0 * k / L) -
             0.6 * std::sin(2.0 * std::numbers::pi * 2.0 * k / L);
  }
  auto corr = fit_fourier(eps);
  for (int i = 0; i < L; ++i) CHECK(corr.evaluate(i + 2) == doctest::Approx(eps[i]).epsilon(1e-9));
}

TEST_CASE("Fourier correction never increases in-sample error") {
  std::mt19937_64 gen(23);
  for (int trial = 0; trial < 500; ++trial) {
    const int L = 6 + static_cast<int>(uniform01(gen) * 15);
    std::vector<double> eps(L);
    for (auto& e : eps) e = -3.0 + 6.0 * uniform01(gen);
    auto corr = fit_fourier(eps);
    double before = 0, after = 0;
    for (int i = 0; i < L; ++i) {
      before += eps[i] * eps[i];
      const double r = eps[i] - corr.evaluate(i + 2);
      after += r * r;
    }
    CHECK(after <= before + 1e-9);
  }
}

TEST_CASE("Fourier correction needs at least six residuals") {
  std::vector<double> eps(5, 1.0);
  CHECK_THROWS_AS(fit_fourier(eps), config_error);
}

TEST_CASE("rolling_forecast aligns forecasts one step past each window") {
  // Deterministic exponential decay: parameters are recovered exactly
  // (checked elsewhere), and the response tracks the series up to the
  // development coefficient's rational approximation of -log(ratio).
  std::vector<double> series;
  double v = 100.0;
  for (int i = 0; i < 12; ++i) {
    series.push_back(v);
    v *= 0.9;
  }
  auto rf = rolling_forecast(series, GreyVariant::gm11, 4);
  CHECK(rf.first_index == 4);
  REQUIRE(rf.values.size() == 8);
  for (std::size_t i = 0; i < rf.values.size(); ++i) {
    CHECK_FALSE(rf.fallback[i]);
    CHECK(rf.values[i] == doctest::Approx(series[rf.first_index + i]).epsilon(2e-3));
  }
}

TEST_CASE("rolling_forecast equals a window-by-window refit") {
  std::mt19937_64 gen(31);
  std::vector<double> series;
  for (int i = 0; i < 40; ++i) series.push_back(30.0 + 30.0 * uniform01(gen));
  const int w = 6;
  auto rf = rolling_forecast(series, GreyVariant::gm11, w);
  REQUIRE(rf.values.size() == series.size() - w);
  for (std::size_t i = 0; i < rf.values.size(); ++i) {
    std::vector<double> window(series.begin() + i, series.begin() + i + w);
    auto fit = fit_gm11(GreyWindow{window});
    CHECK(rf.values[i] == predict_gm11(fit, w));
  }
}

TEST_CASE("rolling_forecast error-corrected variants fit in-window residuals") {
  std::mt19937_64 gen(37);
  std::vector<double> series;
  for (int i = 0; i < 30; ++i)
    series.push_back(50.0 + 8.0 * std::sin(0.7 * i) + 2.0 * uniform01(gen));
  const int w = 8;
  auto rf = rolling_forecast(series, GreyVariant::efgm, w);
  REQUIRE(rf.values.size() == series.size() - w);
  // Reproduce the first corrected forecast by hand.
  std::vector<double> window(series.begin(), series.begin() + w);
  auto fit = fit_gm11(GreyWindow{window});
  std::vector<double> eps;
  for (int k = 1; k < w; ++k) eps.push_back(window[k] - predict_gm11(fit, k));
  auto corr = fit_fourier(eps);
  const double expect = predict_gm11(fit, w) + corr.evaluate(w + 1);
  CHECK(rf.values[0] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("rolling_forecast falls back to persistence on degenerate windows") {
  // A window that defeats the Verhulst regression (exactly constant makes
  // z1 quadratic collinear... use values forcing a singular system).
  std::vector<double> series(12, 5.0);
  auto rf = rolling_forecast(series, GreyVariant::gvm, 4);
  REQUIRE(rf.values.size() == 8);
  for (std::size_t i = 0; i < rf.values.size(); ++i) {
    if (rf.fallback[i]) CHECK(rf.values[i] == 5.0);
    CHECK(std::isfinite(rf.values[i]));
  }
}

TEST_CASE("rolling_forecast validates window size and variant requirements") {
  std::vector<double> series(20, 5.0);
  CHECK_THROWS_AS(rolling_forecast(series, GreyVariant::gm11, 3), config_error);
  CHECK_THROWS_AS(rolling_forecast(series, GreyVariant::efgm, 6), config_error);  // needs w >= 7
  CHECK_NOTHROW(rolling_forecast(series, GreyVariant::efgm, 7));
  std::vector<double> tiny(4, 5.0);
  CHECK_THROWS_AS(rolling_forecast(tiny, GreyVariant::gm11, 4), data_error);  // nothing to forecast
}

TEST_CASE("rolling_forecast clamps non-positive inputs instead of failing") {
  std::vector<double> series = {5, 4, 0.0, 3, 4, 5, 6, 5, 4, 3};
  auto rf = rolling_forecast(series, GreyVariant::gm11, 4);
  for (double f : rf.values) CHECK(std::isfinite(f));
}

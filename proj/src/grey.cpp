#include "trafficfc/grey.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "trafficfc/errors.hpp"

namespace trafficfc {

namespace {

constexpr double kPositivityFloor = 1e-6;
constexpr double kDevelopmentEpsilon = 1e-9;  // |a| below this means no development

}  // namespace

const char* grey_variant_name(GreyVariant v) {
  switch (v) {
    case GreyVariant::gm11: return "gm11";
    case GreyVariant::efgm: return "efgm";
    case GreyVariant::gvm: return "gvm";
    case GreyVariant::efgvm: return "efgvm";
  }
  return "?";
}

GreyVariant grey_variant_from_name(const std::string& name) {
  for (GreyVariant v : {GreyVariant::gm11, GreyVariant::efgm, GreyVariant::gvm, GreyVariant::efgvm})
    if (name == grey_variant_name(v)) return v;
  throw config_error("unknown grey variant: " + name);
}

void GreyWindow::validate() const {
  if (values.size() < 4) throw config_error("grey window must hold at least 4 values");
  for (double v : values)
    if (!(v > 0.0)) throw data_error("grey window values must be strictly positive");
}

std::vector<double> ago(std::span<const double> x0) {
  std::vector<double> x1;
  x1.reserve(x0.size());
  double sum = 0.0;
  for (double v : x0) {
    sum += v;
    x1.push_back(sum);
  }
  return x1;
}

std::vector<double> mean_sequence(std::span<const double> x1) {
  std::vector<double> z1;
  if (x1.size() < 2) return z1;
  z1.reserve(x1.size() - 1);
  for (std::size_t k = 1; k < x1.size(); ++k) z1.push_back(0.5 * (x1[k - 1] + x1[k]));
  return z1;
}

GreyFit fit_gm11(const GreyWindow& window) {
  window.validate();
  const auto& x0 = window.values;

  GreyFit fit;
  fit.variant = GreyVariant::gm11;
  fit.x0_1 = x0[0];

  // Identical values: the least-squares limit is no development at all.
  // Short-circuiting keeps the constant exact in floating point.
  if (std::all_of(x0.begin(), x0.end(), [&](double v) { return v == x0[0]; })) {
    fit.a = 0.0;
    fit.b = x0[0];
    return fit;
  }

  const auto z1 = mean_sequence(ago(x0));
  const std::size_t m = z1.size();  // regression points k = 2..w
  double zbar = 0.0, ybar = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    zbar += z1[i];
    ybar += x0[i + 1];
  }
  zbar /= static_cast<double>(m);
  ybar /= static_cast<double>(m);
  double szz = 0.0, szy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    szz += (z1[i] - zbar) * (z1[i] - zbar);
    szy += (z1[i] - zbar) * (x0[i + 1] - ybar);
  }
  if (szz <= 0.0) throw numerical_error("gm11 fit: degenerate accumulated sequence");
  // x0(k) = -a z1(k) + b: slope of the centred regression is -a.
  fit.a = -szy / szz;
  fit.b = ybar + fit.a * zbar;
  if (!std::isfinite(fit.a) || !std::isfinite(fit.b))
    throw numerical_error("gm11 fit: non-finite coefficients");
  return fit;
}

double predict_gm11(const GreyFit& fit, int k) {
  if (k < 1) throw config_error("predict_gm11: k must be at least 1");
  // Tiny development: the response degenerates to the constant input level.
  if (std::abs(fit.a) < kDevelopmentEpsilon) return fit.b;
  const double out =
      (1.0 - std::exp(fit.a)) * (fit.x0_1 - fit.b / fit.a) * std::exp(-fit.a * k);
  if (!std::isfinite(out)) throw numerical_error("predict_gm11: non-finite forecast");
  return out;
}

GreyFit fit_gvm(const GreyWindow& window) {
  window.validate();
  const auto& x0 = window.values;
  const auto z1 = mean_sequence(ago(x0));
  const std::size_t m = z1.size();

  // x0(k) = a * (-z1(k)) + b * z1(k)^2, solved as an overdetermined system.
  Eigen::MatrixXd design(m, 2);
  Eigen::VectorXd rhs(m);
  for (std::size_t i = 0; i < m; ++i) {
    design(static_cast<Eigen::Index>(i), 0) = -z1[i];
    design(static_cast<Eigen::Index>(i), 1) = z1[i] * z1[i];
    rhs(static_cast<Eigen::Index>(i)) = x0[i + 1];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 2) throw numerical_error("gvm fit: rank-deficient regression");
  const Eigen::Vector2d coef = qr.solve(rhs);
  GreyFit fit;
  fit.variant = GreyVariant::gvm;
  fit.a = coef(0);
  fit.b = coef(1);
  fit.x0_1 = x0[0];
  if (!std::isfinite(fit.a) || !std::isfinite(fit.b))
    throw numerical_error("gvm fit: non-finite coefficients");
  return fit;
}

double predict_gvm(const GreyFit& fit, int k) {
  if (k < 1) throw config_error("predict_gvm: k must be at least 1");
  // Closed accumulated response; j = 1 is the anchor x1(1) = x0(1).
  auto x1hat = [&](int j) -> double {
    if (j <= 1) return fit.x0_1;
    if (std::abs(fit.a) < kDevelopmentEpsilon) {
      // a -> 0 limit: 1/x1(j) grows linearly, x1(j) = x1 / (1 - b x1 (j-1)).
      const double denom = 1.0 - fit.b * fit.x0_1 * (j - 1);
      if (std::abs(denom) < 1e-12) throw numerical_error("predict_gvm: response blow-up");
      return fit.x0_1 / denom;
    }
    const double denom =
        fit.b * fit.x0_1 + (fit.a - fit.b * fit.x0_1) * std::exp(fit.a * (j - 1));
    if (std::abs(denom) < 1e-300) throw numerical_error("predict_gvm: response blow-up");
    return fit.a * fit.x0_1 / denom;
  };
  const double out = x1hat(k + 1) - x1hat(k);
  if (!std::isfinite(out)) throw numerical_error("predict_gvm: non-finite forecast");
  return out;
}

double FourierCorrection::evaluate(int k) const {
  double out = 0.5 * coefficients[0];
  const double base = 2.0 * std::numbers::pi * static_cast<double>(k) / period;
  for (int i = 1; i <= harmonics; ++i) {
    out += coefficients[2 * i - 1] * std::cos(base * i);
    out += coefficients[2 * i] * std::sin(base * i);
  }
  return out;
}

FourierCorrection fit_fourier(std::span<const double> errors) {
  const int L = static_cast<int>(errors.size());
  if (L < 6) throw config_error("fourier fit needs at least six residuals");
  FourierCorrection corr;
  corr.period = L;            // T = n - 1 with residuals at k = 2..n
  corr.harmonics = L / 2 - 1; // keeps columns independent and the system overdetermined

  const int cols = 2 * corr.harmonics + 1;
  Eigen::MatrixXd P(L, cols);
  Eigen::VectorXd rhs(L);
  for (int i = 0; i < L; ++i) {
    const int k = i + 2;
    const double base = 2.0 * std::numbers::pi * static_cast<double>(k) / corr.period;
    P(i, 0) = 0.5;
    for (int h = 1; h <= corr.harmonics; ++h) {
      P(i, 2 * h - 1) = std::cos(base * h);
      P(i, 2 * h) = std::sin(base * h);
    }
    rhs(i) = errors[static_cast<std::size_t>(i)];
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(P);
  Eigen::VectorXd c;
  if (qr.rank() == cols) {
    c = qr.solve(rhs);
  } else {
    // Ridge fallback for a degenerate basis.
    Eigen::MatrixXd gram = P.transpose() * P;
    const double lambda = 1e-10 * gram.trace() / cols;
    gram.diagonal().array() += lambda;
    c = gram.ldlt().solve(P.transpose() * rhs);
  }
  if (!c.allFinite()) throw numerical_error("fourier fit: non-finite coefficients");
  corr.coefficients.assign(c.data(), c.data() + c.size());
  return corr;
}

double apply_correction(double base, const FourierCorrection& correction, int k) {
  return base + correction.evaluate(k);
}

namespace {

/// One fitted window forecast at the first out-of-window position. Throws
/// numerical_error when the window defeats the model.
double grey_step(const std::vector<double>& window, GreyVariant variant) {
  const int w = static_cast<int>(window.size());
  GreyWindow gw{window};
  const bool verhulst = variant == GreyVariant::gvm || variant == GreyVariant::efgvm;
  const GreyFit fit = verhulst ? fit_gvm(gw) : fit_gm11(gw);
  auto predict = [&](int k) { return verhulst ? predict_gvm(fit, k) : predict_gm11(fit, k); };

  double forecast = predict(w);
  if (variant == GreyVariant::efgm || variant == GreyVariant::efgvm) {
    std::vector<double> eps;
    eps.reserve(static_cast<std::size_t>(w) - 1);
    // In-window one-step residuals at positions k = 2..w.
    for (int k = 1; k < w; ++k) eps.push_back(window[static_cast<std::size_t>(k)] - predict(k));
    const FourierCorrection corr = fit_fourier(eps);
    forecast = apply_correction(forecast, corr, w + 1);
  }
  if (!std::isfinite(forecast)) throw numerical_error("grey forecast: non-finite value");
  return forecast;
}

}  // namespace

double grey_window_forecast(std::span<const double> window, GreyVariant variant) {
  const int w = static_cast<int>(window.size());
  if (w < 4) throw config_error("grey rolling window must be at least 4");
  if ((variant == GreyVariant::efgm || variant == GreyVariant::efgvm) && w < 7)
    throw config_error("error-corrected grey variants need a window of at least 7");
  std::vector<double> buf(window.size());
  for (std::size_t i = 0; i < window.size(); ++i)
    buf[i] = std::max(window[i], kPositivityFloor);
  return grey_step(buf, variant);
}

RollingForecast rolling_forecast(std::span<const double> series, GreyVariant variant, int window) {
  if (window < 4) throw config_error("grey rolling window must be at least 4");
  const bool corrected = variant == GreyVariant::efgm || variant == GreyVariant::efgvm;
  if (corrected && window < 7)
    throw config_error("error-corrected grey variants need a window of at least 7");
  if (series.size() <= static_cast<std::size_t>(window))
    throw data_error("grey rolling forecast: series not longer than the window");

  RollingForecast out;
  out.first_index = static_cast<std::size_t>(window);
  const std::size_t steps = series.size() - static_cast<std::size_t>(window);
  out.values.reserve(steps);
  out.fallback.reserve(steps);

  for (std::size_t start = 0; start < steps; ++start) {
    double f;
    std::uint8_t fell = 0;
    try {
      f = grey_window_forecast(series.subspan(start, static_cast<std::size_t>(window)), variant);
    } catch (const numerical_error&) {
      f = series[start + static_cast<std::size_t>(window) - 1];  // persistence
      fell = 1;
    } catch (const data_error&) {
      f = series[start + static_cast<std::size_t>(window) - 1];
      fell = 1;
    }
    out.values.push_back(f);
    out.fallback.push_back(fell);
  }
  return out;
}

}  // namespace trafficfc

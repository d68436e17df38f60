#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace trafficfc {

/// Rolling grey-model families: plain GM(1,1), Verhulst (gvm), and their
/// Fourier error-corrected versions (efgm, efgvm).
enum class GreyVariant { gm11, efgm, gvm, efgvm };

const char* grey_variant_name(GreyVariant v);
GreyVariant grey_variant_from_name(const std::string& name);  // throws config_error

/// One fitting window x0(1..w). Grey models need at least four strictly
/// positive values.
struct GreyWindow {
  std::vector<double> values;

  void validate() const;  // throws config_error (size) or data_error (positivity)
};

/// Fitted grey model. `a` is the development coefficient, `b` the grey
/// input (GM) or the quadratic coefficient (Verhulst); x0_1 anchors the
/// accumulated response at the first window value.
struct GreyFit {
  GreyVariant variant = GreyVariant::gm11;
  double a = 0.0;
  double b = 0.0;
  double x0_1 = 0.0;
};

/// Periodic residual model fitted to in-window one-step errors. The period
/// is the residual count and the harmonic count is chosen to keep the
/// system overdetermined.
struct FourierCorrection {
  std::vector<double> coefficients;  // a0, a1, b1, ..., az, bz
  int period = 0;                    // T
  int harmonics = 0;                 // z

  /// Correction value at step index k (the same k used when fitting,
  /// i.e. residual positions were k = 2..n).
  double evaluate(int k) const;
};

/// Accumulated generating operation: x1(k) = sum of x0(1..k).
std::vector<double> ago(std::span<const double> x0);

/// Adjacent means of the accumulated series, defined for k = 2..n:
/// z1(k) = (x1(k-1) + x1(k)) / 2. Returns n-1 values.
std::vector<double> mean_sequence(std::span<const double> x1);

/// Least-squares GM(1,1): x0(k) = -a z1(k) + b over k = 2..w. A window of
/// identical values short-circuits to the exact limit a = 0, b = value.
GreyFit fit_gm11(const GreyWindow& window);

/// One-step-ahead GM(1,1) forecast of x0(k+1); k = w forecasts the first
/// value beyond the window. Near-zero development coefficients degrade
/// gracefully to the constant b.
double predict_gm11(const GreyFit& fit, int k);

/// Least-squares Verhulst: x0(k) = -a z1(k) + b z1(k)^2 over k = 2..w.
GreyFit fit_gvm(const GreyWindow& window);

/// Verhulst forecast of x0(k+1), obtained by differencing the closed
/// logistic accumulated response anchored at x0(1).
double predict_gvm(const GreyFit& fit, int k);

/// Fit the periodic residual model to one-step errors eps(k), k = 2..n
/// (so errors.size() = n-1 = period). Requires at least six residuals.
FourierCorrection fit_fourier(std::span<const double> errors);

/// base forecast plus the fitted periodic residual at step k.
double apply_correction(double base, const FourierCorrection& correction, int k);

/// Rolling one-step forecasts over a series: fit on each length-w window and
/// forecast the next value. values[i] targets series position first_index+i.
/// Windows where fitting or forecasting fails numerically fall back to
/// persistence (last window value) and are flagged.
struct RollingForecast {
  std::size_t first_index = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> fallback;
};

/// Error-corrected variants additionally fit the in-window one-step
/// residuals and add the fitted periodic term at the forecast position;
/// they need w >= 7 so the residual fit is overdetermined. Non-positive
/// inputs are clamped to a small positive floor before fitting.
RollingForecast rolling_forecast(std::span<const double> series, GreyVariant variant, int window);

/// The single step rolling_forecast takes per window: clamp the raw values
/// at the positivity floor, fit the variant, forecast one position past the
/// window (error-corrected variants include the periodic residual term).
/// Fitting failures propagate as numerical_error so callers can install
/// their own fallback.
double grey_window_forecast(std::span<const double> window, GreyVariant variant);

}  // namespace trafficfc

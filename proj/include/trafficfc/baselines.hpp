#pragma once

// Scalar time-series baselines: linear autoregressions, threshold and
// smooth-transition regime models, a single-hidden-layer neural
// autoregression, an additive spline autoregression, and two fixed-order
// ARIMA forms. All predictors are one-step-ahead: given history
// Z_1..Z_t they return a forecast of Z_{t+1}.

#include <Eigen/Dense>
#include <cstdint>
#include <json.hpp>
#include <utility>
#include <vector>

namespace trafficfc {

// Size and fit statistics attached to every estimated model.
struct FitQuality {
  double sse = 0.0;  // in-sample sum of squared one-step errors
  int n = 0;         // rows in the estimation design
  int k = 0;         // free parameters
};

struct ArParams {
  double intercept = 0.0;
  std::vector<double> phi;  // phi[j] multiplies Z_{t-j*delay}
  int delay = 1;
  FitQuality quality;
};

// One regime of a threshold / smooth-transition model.
struct RegimeParams {
  double intercept = 0.0;
  std::vector<double> phi;
};

struct SetarParams {
  RegimeParams low;   // governs when Z_t <= threshold
  RegimeParams high;  // governs when Z_t >  threshold
  double threshold = 0.0;
  int delay = 1;
  double low_fraction = 0.0;  // share of estimation rows in the low regime
  FitQuality quality;
};

struct LstarParams {
  RegimeParams low;
  RegimeParams high;
  double threshold = 0.0;
  double gamma = 1.0;  // logistic transition slope; larger = sharper switch
  int delay = 1;
  FitQuality quality;
};

struct NnetsParams {
  int m = 0;  // embedding length (input lags)
  int D = 0;  // hidden units
  int delay = 1;
  double beta0 = 0.0;
  std::vector<double> beta;    // output weights, one per hidden unit
  std::vector<double> gamma0;  // hidden biases, one per hidden unit
  Eigen::MatrixXd gamma;       // input weights, (m x D)
  std::vector<double> loss_trace;  // accepted training loss per epoch
  FitQuality quality;
};

// One fitted ridge-stabilised natural cubic spline, evaluated on a lag.
struct SplineSmoother {
  std::vector<double> knots;         // >= 2 distinct, sorted
  std::vector<double> coefficients;  // [linear, natural-basis terms...]
  std::vector<double> offsets;       // training mean of each basis function
  bool linear_only = false;          // too few distinct knots: straight line
  double evaluate(double x) const;   // centered: sum c_b * (basis_b(x) - offset_b)
};

struct AarParams {
  double mu = 0.0;  // shared intercept
  int m = 0;
  int delay = 1;
  std::vector<SplineSmoother> smoothers;  // one per lag
  FitQuality quality;
};

struct SarimaParams {
  double mu = 0.0;
  double phi1 = 0.0;
  std::vector<double> theta;           // nonseasonal MA, 3 terms
  double seasonal_phi1 = 0.0;
  std::vector<double> seasonal_theta;  // seasonal MA, 2 terms
  int seasonal_period = 0;             // must be set (>= 2) before predicting
};

// One-step predictors. History must be at least (order-1)*delay + 1 long
// (LSTAR additionally needs the transition lag Z_{t-delay}).
double predict_ar(const ArParams& params, const std::vector<double>& history);
double predict_setar(const SetarParams& params, const std::vector<double>& history);
double predict_lstar(const LstarParams& params, const std::vector<double>& history);
double predict_nnets(const NnetsParams& params, const std::vector<double>& history);
double predict_aar(const AarParams& params, const std::vector<double>& history);

// Random-walk-plus-noise smoother: e_i = (Z_i - Z_{i-1}) - theta1 * e_{i-1}
// with e_0 = 0; forecast = Z_t + theta1 * e_t. theta1 = 0 is persistence.
double predict_arima011(double theta1, const std::vector<double>& history);

// Fixed-coefficient multiplicative seasonal model (1,0,3)x(1,0,2)_s on
// deviations from mu, run as a conditional innovation recursion with zero
// pre-sample values. Requires seasonal_period >= 2 and history covering
// one season plus the MA memory.
double predict_sarima_fixed(const SarimaParams& params, const std::vector<double>& history);

// Estimators. Orders count lag coefficients per regime.
ArParams fit_ar(const std::vector<double>& series, int order, int delay = 1);
SetarParams fit_setar(const std::vector<double>& series, int low_order, int high_order,
                      int delay);
LstarParams fit_lstar(const std::vector<double>& series, int low_order, int high_order,
                      int delay);
NnetsParams fit_nnets(const std::vector<double>& series, int m, int hidden,
                      std::uint64_t seed, int delay = 1);
AarParams fit_aar(const std::vector<double>& series, int m, int delay);
double fit_arima011(const std::vector<double>& series);

// {AIC, BIC} for a Gaussian one-step model: n*ln(sse/n) + penalty * k.
// Requires n > k >= 1 and sse > 0.
std::pair<double, double> information_criteria(double sse, int n, int k);

// Published reference coefficients for the Portland November data set,
// shipped both embedded and as resources/table2_portland_november.json.
struct PortlandFixtures {
  ArParams ar;
  SetarParams setar;
  LstarParams lstar;
  SarimaParams sarima;        // seasonal_period intentionally unset
  double arima011_theta1 = 0.0;
};

PortlandFixtures portland_november_fixtures();
PortlandFixtures fixtures_from_json(const nlohmann::json& doc);

}  // namespace trafficfc

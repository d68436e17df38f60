#include "trafficfc/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "trafficfc/errors.hpp"
#include "trafficfc/rng.hpp"

namespace trafficfc {

namespace {

constexpr double kRidgeScale = 1e-10;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void require_history(const std::vector<double>& history, std::size_t needed,
                     const char* model) {
  if (history.size() < needed) {
    std::ostringstream os;
    os << model << ": history has " << history.size() << " values, needs " << needed;
    throw data_error(os.str());
  }
}

// history.back() is Z_t; lag j (j = 0 is Z_t itself) reads Z_{t-j*delay}.
double lag_value(const std::vector<double>& history, std::size_t j, int delay) {
  return history[history.size() - 1 - j * static_cast<std::size_t>(delay)];
}

double regime_value(const RegimeParams& regime, const std::vector<double>& history,
                    int delay) {
  double value = regime.intercept;
  for (std::size_t j = 0; j < regime.phi.size(); ++j)
    value += regime.phi[j] * lag_value(history, j, delay);
  return value;
}

std::size_t span_needed(std::size_t order, int delay) {
  return order == 0 ? 1 : (order - 1) * static_cast<std::size_t>(delay) + 1;
}

// Least squares with a ridge fallback for rank-deficient designs. The
// fallback keeps degenerate inputs (constant series, empty regimes) on a
// well-defined path instead of surfacing solver NaNs.
Eigen::VectorXd solve_least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() == X.cols()) {
    Eigen::VectorXd beta = qr.solve(y);
    if (beta.allFinite()) return beta;
  }
  Eigen::MatrixXd gram = X.transpose() * X;
  double lambda = kRidgeScale * gram.trace() / static_cast<double>(X.cols());
  if (!(lambda > 0.0)) lambda = 1e-12;
  gram.diagonal().array() += lambda;
  Eigen::VectorXd beta = gram.ldlt().solve(X.transpose() * y);
  if (!beta.allFinite()) throw numerical_error("least squares solve produced non-finite values");
  return beta;
}

double residual_sse(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& beta) {
  return (y - X * beta).squaredNorm();
}

std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> c(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
  return c;
}

// Candidate thresholds: distinct values from the middle 70 % of the sorted
// threshold variable, thinned to at most `cap` entries.
std::vector<double> threshold_candidates(std::vector<double> values, std::size_t cap) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  const std::size_t lo = static_cast<std::size_t>(0.15 * static_cast<double>(n));
  const std::size_t hi = static_cast<std::size_t>(0.85 * static_cast<double>(n));
  std::vector<double> mid(values.begin() + static_cast<long>(lo),
                          values.begin() + static_cast<long>(std::max(hi, lo + 1)));
  mid.erase(std::unique(mid.begin(), mid.end()), mid.end());
  if (mid.size() <= cap) return mid;
  std::vector<double> thinned;
  thinned.reserve(cap);
  for (std::size_t i = 0; i < cap; ++i)
    thinned.push_back(mid[i * (mid.size() - 1) / (cap - 1)]);
  thinned.erase(std::unique(thinned.begin(), thinned.end()), thinned.end());
  return thinned;
}

struct LagRows {
  // row r predicts series[target_of(r)]; lag columns are filled on demand.
  std::size_t t0 = 0;  // first predictor index t
  std::size_t rows = 0;
};

LagRows lag_rows(const std::vector<double>& series, std::size_t max_order, int delay,
                 std::size_t extra_span, const char* model) {
  if (max_order < 1) throw config_error(std::string(model) + ": order must be >= 1");
  if (delay < 1) throw config_error(std::string(model) + ": delay must be >= 1");
  const std::size_t span = std::max(span_needed(max_order, delay), extra_span);
  if (series.size() < span + 2) {
    std::ostringstream os;
    os << model << ": series of " << series.size() << " values is too short for order "
       << max_order << " at delay " << delay;
    throw data_error(os.str());
  }
  LagRows out;
  out.t0 = span - 1;
  out.rows = series.size() - 1 - out.t0;
  return out;
}

Eigen::MatrixXd regime_design(const std::vector<double>& series,
                              const std::vector<std::size_t>& ts, std::size_t order,
                              int delay) {
  Eigen::MatrixXd X(static_cast<long>(ts.size()), static_cast<long>(order) + 1);
  for (std::size_t r = 0; r < ts.size(); ++r) {
    X(static_cast<long>(r), 0) = 1.0;
    for (std::size_t j = 0; j < order; ++j)
      X(static_cast<long>(r), static_cast<long>(j) + 1) =
          series[ts[r] - j * static_cast<std::size_t>(delay)];
  }
  return X;
}

Eigen::VectorXd regime_targets(const std::vector<double>& series,
                               const std::vector<std::size_t>& ts) {
  Eigen::VectorXd y(static_cast<long>(ts.size()));
  for (std::size_t r = 0; r < ts.size(); ++r) y(static_cast<long>(r)) = series[ts[r] + 1];
  return y;
}

RegimeParams regime_from(const Eigen::VectorXd& beta) {
  RegimeParams out;
  out.intercept = beta(0);
  out.phi.assign(beta.data() + 1, beta.data() + beta.size());
  return out;
}

const char kEmbeddedFixtureJson[] = R"json({
  "description": "Pre-fitted model parameters for the Portland November loop-detector speed data, shipped as named fixtures.",
  "ar": {
    "intercept": 4.787,
    "phi": [1.117, -0.124, -0.071]
  },
  "arima011": {
    "theta1": 0.156
  },
  "lstar": {
    "low": {"intercept": 4.724, "phi": [1.248, -0.315, -0.018]},
    "high": {"intercept": 23.908, "phi": [-1.030, 0.444, 0.219]},
    "threshold": 63.54,
    "gamma": 5.0,
    "delay": 1
  },
  "sarima": {
    "mu": 61.473,
    "phi1": 0.889,
    "theta": [0.216, 0.107, 0.079],
    "seasonal_phi1": 0.048,
    "seasonal_theta": [-0.138, -0.024]
  },
  "setar": {
    "low": {"intercept": 4.736, "phi": [1.249, -0.317, -0.018]},
    "high": {"intercept": 29.744, "phi": [0.218, 0.111, 0.202]},
    "threshold": 63.5,
    "delay": 1,
    "low_fraction": 0.5317
  }
})json";

RegimeParams regime_from_json(const nlohmann::json& doc) {
  RegimeParams out;
  out.intercept = doc.at("intercept").get<double>();
  out.phi = doc.at("phi").get<std::vector<double>>();
  return out;
}

}  // namespace

// ---- fixed-parameter predictors ------------------------------------------------

double predict_ar(const ArParams& params, const std::vector<double>& history) {
  require_history(history, span_needed(params.phi.size(), params.delay), "predict_ar");
  double value = params.intercept;
  for (std::size_t j = 0; j < params.phi.size(); ++j)
    value += params.phi[j] * lag_value(history, j, params.delay);
  return value;
}

double predict_setar(const SetarParams& params, const std::vector<double>& history) {
  const std::size_t span = std::max(span_needed(params.low.phi.size(), params.delay),
                                    span_needed(params.high.phi.size(), params.delay));
  require_history(history, span, "predict_setar");
  const bool low = history.back() <= params.threshold;
  return regime_value(low ? params.low : params.high, history, params.delay);
}

double predict_lstar(const LstarParams& params, const std::vector<double>& history) {
  const std::size_t span =
      std::max({span_needed(params.low.phi.size(), params.delay),
                span_needed(params.high.phi.size(), params.delay),
                static_cast<std::size_t>(params.delay) + 1});
  require_history(history, span, "predict_lstar");
  if (!(params.gamma > 0.0)) throw config_error("predict_lstar: gamma must be positive");
  // Transition variable is one delay behind the last observation.
  const double zt = lag_value(history, 1, params.delay);
  const double g = logistic(params.gamma * (zt - params.threshold));
  return (1.0 - g) * regime_value(params.low, history, params.delay) +
         g * regime_value(params.high, history, params.delay);
}

double predict_nnets(const NnetsParams& params, const std::vector<double>& history) {
  if (params.m < 1 || params.D < 1) throw config_error("predict_nnets: m and D must be >= 1");
  if (params.gamma.rows() != params.m || params.gamma.cols() != params.D ||
      static_cast<int>(params.beta.size()) != params.D ||
      static_cast<int>(params.gamma0.size()) != params.D)
    throw config_error("predict_nnets: weight shapes do not match (m, D)");
  require_history(history, span_needed(static_cast<std::size_t>(params.m), params.delay),
                  "predict_nnets");
  double value = params.beta0;
  for (int j = 0; j < params.D; ++j) {
    double pre = params.gamma0[static_cast<std::size_t>(j)];
    for (int i = 0; i < params.m; ++i)
      pre += params.gamma(i, j) * lag_value(history, static_cast<std::size_t>(i), params.delay);
    value += params.beta[static_cast<std::size_t>(j)] * logistic(pre);
  }
  return value;
}

double SplineSmoother::evaluate(double x) const {
  if (coefficients.empty()) return 0.0;
  double value = coefficients[0] * x;
  if (!linear_only && knots.size() >= 3) {
    const std::size_t K = knots.size();
    const double kappa_last = knots[K - 1];
    auto cube_plus = [](double v) { return v > 0.0 ? v * v * v : 0.0; };
    auto d = [&](std::size_t k) {
      return (cube_plus(x - knots[k]) - cube_plus(x - kappa_last)) / (kappa_last - knots[k]);
    };
    const double d_last = d(K - 2);
    for (std::size_t k = 0; k + 2 < K; ++k) value += coefficients[k + 1] * (d(k) - d_last);
  }
  double offset = 0.0;
  for (std::size_t b = 0; b < offsets.size() && b < coefficients.size(); ++b)
    offset += coefficients[b] * offsets[b];
  return value - offset;
}

double predict_aar(const AarParams& params, const std::vector<double>& history) {
  if (params.m < 1) throw config_error("predict_aar: m must be >= 1");
  if (static_cast<int>(params.smoothers.size()) != params.m)
    throw config_error("predict_aar: one smoother per lag required");
  require_history(history, span_needed(static_cast<std::size_t>(params.m), params.delay),
                  "predict_aar");
  double value = params.mu;
  for (int j = 0; j < params.m; ++j)
    value += params.smoothers[static_cast<std::size_t>(j)].evaluate(
        lag_value(history, static_cast<std::size_t>(j), params.delay));
  return value;
}

double predict_arima011(double theta1, const std::vector<double>& history) {
  require_history(history, 2, "predict_arima011");
  if (!std::isfinite(theta1) || std::abs(theta1) >= 1.0)
    throw config_error("predict_arima011: theta1 must be finite with |theta1| < 1");
  // difference = e_t + theta1*e_{t-1}, so innovations unwind as
  // e_t = diff_t - theta1*e_{t-1} with e_0 = 0.
  double e = 0.0;
  for (std::size_t i = 1; i < history.size(); ++i)
    e = (history[i] - history[i - 1]) - theta1 * e;
  return history.back() + theta1 * e;
}

double predict_sarima_fixed(const SarimaParams& params, const std::vector<double>& history) {
  if (params.seasonal_period < 2)
    throw config_error("predict_sarima_fixed: seasonal period must be configured (>= 2)");
  const std::size_t s = static_cast<std::size_t>(params.seasonal_period);
  if (history.size() < s + 3) {
    std::ostringstream os;
    os << "predict_sarima_fixed: history of " << history.size()
       << " values is shorter than seasonal period + 3 = " << s + 3;
    throw data_error(os.str());
  }

  // Expand the multiplicative form into plain AR and MA lag polynomials.
  std::vector<double> ar_seasonal(s + 1, 0.0);
  ar_seasonal[0] = 1.0;
  ar_seasonal[s] = -params.seasonal_phi1;
  const std::vector<double> ar = poly_mul({1.0, -params.phi1}, ar_seasonal);

  std::vector<double> ma_nonseasonal{1.0};
  ma_nonseasonal.insert(ma_nonseasonal.end(), params.theta.begin(), params.theta.end());
  std::vector<double> ma_seasonal(s * params.seasonal_theta.size() + 1, 0.0);
  ma_seasonal[0] = 1.0;
  for (std::size_t j = 0; j < params.seasonal_theta.size(); ++j)
    ma_seasonal[(j + 1) * s] = params.seasonal_theta[j];
  const std::vector<double> ma = poly_mul(ma_nonseasonal, ma_seasonal);

  // Conditional innovation recursion on deviations from mu, with zero
  // pre-sample values.
  const std::size_t n = history.size();
  std::vector<double> y(n), e(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) y[i] = history[i] - params.mu;
  auto predicted = [&](std::size_t i) {
    double yhat = 0.0;
    for (std::size_t j = 1; j < ar.size() && j <= i; ++j) yhat -= ar[j] * y[i - j];
    for (std::size_t j = 1; j < ma.size() && j <= i; ++j) yhat += ma[j] * e[i - j];
    return yhat;
  };
  for (std::size_t i = 0; i < n; ++i) e[i] = y[i] - predicted(i);
  double yhat_next = 0.0;
  for (std::size_t j = 1; j < ar.size() && j <= n; ++j) yhat_next -= ar[j] * y[n - j];
  for (std::size_t j = 1; j < ma.size() && j <= n; ++j) yhat_next += ma[j] * e[n - j];
  return params.mu + yhat_next;
}

// ---- estimators ------------------------------------------------------------------

ArParams fit_ar(const std::vector<double>& series, int order, int delay) {
  const auto rows = lag_rows(series, static_cast<std::size_t>(order), delay, 0, "fit_ar");
  std::vector<std::size_t> ts(rows.rows);
  for (std::size_t r = 0; r < rows.rows; ++r) ts[r] = rows.t0 + r;
  const Eigen::MatrixXd X = regime_design(series, ts, static_cast<std::size_t>(order), delay);
  const Eigen::VectorXd y = regime_targets(series, ts);
  const Eigen::VectorXd beta = solve_least_squares(X, y);
  ArParams out;
  out.intercept = beta(0);
  out.phi.assign(beta.data() + 1, beta.data() + beta.size());
  out.delay = delay;
  out.quality = {residual_sse(X, y, beta), static_cast<int>(rows.rows), order + 1};
  return out;
}

SetarParams fit_setar(const std::vector<double>& series, int low_order, int high_order,
                      int delay) {
  const std::size_t max_order =
      static_cast<std::size_t>(std::max(low_order, high_order));
  const auto rows = lag_rows(series, max_order, delay, 0, "fit_setar");

  std::vector<double> zvar(rows.rows);
  for (std::size_t r = 0; r < rows.rows; ++r) zvar[r] = series[rows.t0 + r];
  const auto candidates = threshold_candidates(zvar, 201);
  if (candidates.empty()) throw data_error("fit_setar: no usable threshold candidates");
  std::vector<double> sorted_z = zvar;
  std::sort(sorted_z.begin(), sorted_z.end());
  const double median = sorted_z[sorted_z.size() / 2];

  struct Candidate {
    double threshold;
    double sse;
    RegimeParams low, high;
    std::size_t n_low;
  };
  std::vector<Candidate> near_best;
  double best_sse = std::numeric_limits<double>::infinity();
  for (double th : candidates) {
    std::vector<std::size_t> low_ts, high_ts;
    for (std::size_t r = 0; r < rows.rows; ++r)
      (zvar[r] <= th ? low_ts : high_ts).push_back(rows.t0 + r);
    if (low_ts.size() < static_cast<std::size_t>(low_order) + 2 ||
        high_ts.size() < static_cast<std::size_t>(high_order) + 2)
      continue;
    const Eigen::MatrixXd Xl =
        regime_design(series, low_ts, static_cast<std::size_t>(low_order), delay);
    const Eigen::VectorXd yl = regime_targets(series, low_ts);
    const Eigen::VectorXd bl = solve_least_squares(Xl, yl);
    const Eigen::MatrixXd Xh =
        regime_design(series, high_ts, static_cast<std::size_t>(high_order), delay);
    const Eigen::VectorXd yh = regime_targets(series, high_ts);
    const Eigen::VectorXd bh = solve_least_squares(Xh, yh);
    const double sse = residual_sse(Xl, yl, bl) + residual_sse(Xh, yh, bh);
    constexpr double kTieTolerance = 1e-12;
    if (near_best.empty() || sse < best_sse * (1.0 - kTieTolerance)) {
      near_best.clear();
      best_sse = sse;
      near_best.push_back({th, sse, regime_from(bl), regime_from(bh), low_ts.size()});
    } else if (sse <= best_sse * (1.0 + kTieTolerance)) {
      best_sse = std::min(best_sse, sse);
      near_best.push_back({th, sse, regime_from(bl), regime_from(bh), low_ts.size()});
    }
  }
  if (near_best.empty())
    throw data_error("fit_setar: every candidate threshold left a regime underpopulated");
  // Ties go to the threshold nearest the median of the threshold variable.
  const auto chosen = std::min_element(
      near_best.begin(), near_best.end(), [&](const Candidate& a, const Candidate& b) {
        return std::abs(a.threshold - median) < std::abs(b.threshold - median);
      });

  SetarParams out;
  out.low = chosen->low;
  out.high = chosen->high;
  out.threshold = chosen->threshold;
  out.delay = delay;
  out.low_fraction = static_cast<double>(chosen->n_low) / static_cast<double>(rows.rows);
  out.quality = {chosen->sse, static_cast<int>(rows.rows), low_order + high_order + 3};
  return out;
}

LstarParams fit_lstar(const std::vector<double>& series, int low_order, int high_order,
                      int delay) {
  const std::size_t max_order =
      static_cast<std::size_t>(std::max(low_order, high_order));
  const auto rows = lag_rows(series, max_order, delay,
                             static_cast<std::size_t>(delay) + 1, "fit_lstar");
  const std::size_t L = static_cast<std::size_t>(low_order);
  const std::size_t H = static_cast<std::size_t>(high_order);

  std::vector<double> trans(rows.rows);
  for (std::size_t r = 0; r < rows.rows; ++r)
    trans[r] = series[rows.t0 + r - static_cast<std::size_t>(delay)];
  auto thresholds = threshold_candidates(trans, 25);
  if (thresholds.empty()) throw data_error("fit_lstar: no usable threshold candidates");
  static const double kGammaGrid[] = {0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 300.0, 1000.0};

  Eigen::VectorXd y(static_cast<long>(rows.rows));
  Eigen::MatrixXd lag_low(static_cast<long>(rows.rows), static_cast<long>(L) + 1);
  Eigen::MatrixXd lag_high(static_cast<long>(rows.rows), static_cast<long>(H) + 1);
  for (std::size_t r = 0; r < rows.rows; ++r) {
    const std::size_t t = rows.t0 + r;
    y(static_cast<long>(r)) = series[t + 1];
    lag_low(static_cast<long>(r), 0) = 1.0;
    for (std::size_t j = 0; j < L; ++j)
      lag_low(static_cast<long>(r), static_cast<long>(j) + 1) =
          series[t - j * static_cast<std::size_t>(delay)];
    lag_high(static_cast<long>(r), 0) = 1.0;
    for (std::size_t j = 0; j < H; ++j)
      lag_high(static_cast<long>(r), static_cast<long>(j) + 1) =
          series[t - j * static_cast<std::size_t>(delay)];
  }

  struct Best {
    double sse = std::numeric_limits<double>::infinity();
    double gamma = 0.0, threshold = 0.0;
    Eigen::VectorXd beta;
  } best;
  auto evaluate = [&](double gamma, double th) {
    Eigen::MatrixXd X(static_cast<long>(rows.rows), static_cast<long>(L + H) + 2);
    for (std::size_t r = 0; r < rows.rows; ++r) {
      const double g = logistic(gamma * (trans[r] - th));
      X.row(static_cast<long>(r)).head(static_cast<long>(L) + 1) =
          (1.0 - g) * lag_low.row(static_cast<long>(r));
      X.row(static_cast<long>(r)).tail(static_cast<long>(H) + 1) =
          g * lag_high.row(static_cast<long>(r));
    }
    const Eigen::VectorXd beta = solve_least_squares(X, y);
    const double sse = residual_sse(X, y, beta);
    if (sse < best.sse) best = {sse, gamma, th, beta};
  };
  for (double gamma : kGammaGrid)
    for (double th : thresholds) evaluate(gamma, th);
  // One local refinement of the threshold around the coarse winner.
  const double span = thresholds.size() > 1
                          ? (thresholds.back() - thresholds.front()) /
                                static_cast<double>(thresholds.size() - 1)
                          : 0.0;
  if (span > 0.0) {
    for (int i = -10; i <= 10; ++i)
      evaluate(best.gamma, best.threshold + span * 0.1 * static_cast<double>(i));
  }

  LstarParams out;
  out.low.intercept = best.beta(0);
  out.low.phi.assign(best.beta.data() + 1, best.beta.data() + 1 + L);
  out.high.intercept = best.beta(static_cast<long>(L) + 1);
  out.high.phi.assign(best.beta.data() + L + 2, best.beta.data() + best.beta.size());
  out.threshold = best.threshold;
  out.gamma = best.gamma;
  out.delay = delay;
  out.quality = {best.sse, static_cast<int>(rows.rows),
                 low_order + high_order + 4};
  return out;
}

NnetsParams fit_nnets(const std::vector<double>& series, int m, int hidden,
                      std::uint64_t seed, int delay) {
  if (m < 1 || hidden < 1) throw config_error("fit_nnets: m and D must be >= 1");
  const auto rows = lag_rows(series, static_cast<std::size_t>(m), delay, 0, "fit_nnets");
  const long n = static_cast<long>(rows.rows);
  const long D = hidden;

  Eigen::MatrixXd X(n, m);
  Eigen::VectorXd y(n);
  for (long r = 0; r < n; ++r) {
    const std::size_t t = rows.t0 + static_cast<std::size_t>(r);
    y(r) = series[t + 1];
    for (int i = 0; i < m; ++i)
      X(r, i) = series[t - static_cast<std::size_t>(i) * static_cast<std::size_t>(delay)];
  }
  // Standardize inputs and target for a well-scaled optimization problem.
  Eigen::VectorXd xmean = X.colwise().mean();
  Eigen::VectorXd xsd(m);
  for (int i = 0; i < m; ++i) {
    const double var = (X.col(i).array() - xmean(i)).square().mean();
    xsd(i) = var > 1e-24 ? std::sqrt(var) : 1.0;
    X.col(i) = (X.col(i).array() - xmean(i)) / xsd(i);
  }
  const double ymean = y.mean();
  const double yvar = (y.array() - ymean).square().mean();
  const double ysd = yvar > 1e-24 ? std::sqrt(yvar) : 1.0;
  y = (y.array() - ymean) / ysd;

  NormalSampler rng(seed);
  Eigen::MatrixXd W1(m, D);
  Eigen::VectorXd b1(D), w2(D);
  for (long j = 0; j < D; ++j) {
    for (int i = 0; i < m; ++i) W1(i, j) = 0.5 * rng.next();
    b1(j) = 0.5 * rng.next();
    w2(j) = 0.5 * rng.next();
  }
  double b2 = 0.5 * rng.next();

  const auto loss_of = [&](const Eigen::MatrixXd& w1, const Eigen::VectorXd& bias1,
                           const Eigen::VectorXd& wout, double bout,
                           Eigen::MatrixXd& act, Eigen::VectorXd& resid) {
    act = ((X * w1).rowwise() + bias1.transpose())
              .unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    resid = act * wout;
    resid.array() += bout;
    resid -= y;
    return resid.squaredNorm() / (2.0 * static_cast<double>(n));
  };

  Eigen::MatrixXd act;
  Eigen::VectorXd resid;
  double loss = loss_of(W1, b1, w2, b2, act, resid);
  std::vector<double> trace{loss};
  if (!std::isfinite(loss)) {
    std::ostringstream os;
    os << "fit_nnets: non-finite loss at initialization (seed " << seed << ")";
    throw numerical_error(os.str());
  }

  double lr = 0.1;
  const int max_epochs = 2000;
  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    // Backprop through the logistic layer; full-batch gradients.
    const Eigen::MatrixXd hidden_grad =
        (resid * w2.transpose()).cwiseProduct(act.cwiseProduct(
            (1.0 - act.array()).matrix())) /
        static_cast<double>(n);
    const Eigen::VectorXd g_w2 = act.transpose() * resid / static_cast<double>(n);
    const double g_b2 = resid.mean();
    const Eigen::MatrixXd g_W1 = X.transpose() * hidden_grad;
    const Eigen::VectorXd g_b1 = hidden_grad.colwise().sum();
    if (!g_W1.allFinite() || !g_w2.allFinite()) {
      std::ostringstream os;
      os << "fit_nnets: gradient diverged (seed " << seed << ")";
      throw numerical_error(os.str());
    }

    bool accepted = false;
    for (int half = 0; half < 40; ++half) {
      const Eigen::MatrixXd W1_try = W1 - lr * g_W1;
      const Eigen::VectorXd b1_try = b1 - lr * g_b1;
      const Eigen::VectorXd w2_try = w2 - lr * g_w2;
      const double b2_try = b2 - lr * g_b2;
      Eigen::MatrixXd act_try;
      Eigen::VectorXd resid_try;
      const double loss_try = loss_of(W1_try, b1_try, w2_try, b2_try, act_try, resid_try);
      if (std::isfinite(loss_try) && loss_try <= loss) {
        W1 = W1_try;
        b1 = b1_try;
        w2 = w2_try;
        b2 = b2_try;
        act.swap(act_try);
        resid.swap(resid_try);
        const double improvement = loss - loss_try;
        loss = loss_try;
        trace.push_back(loss);
        lr = std::min(lr * 1.2, 1.0);
        accepted = true;
        if (improvement < 1e-14 * (1.0 + loss)) epoch = max_epochs;  // converged
        break;
      }
      lr *= 0.5;
    }
    if (!accepted) break;  // gradient step no longer reduces the loss
  }

  // Map the standardized weights back to raw units.
  NnetsParams out;
  out.m = m;
  out.D = hidden;
  out.delay = delay;
  out.beta0 = ymean + ysd * b2;
  out.beta.resize(static_cast<std::size_t>(D));
  out.gamma0.resize(static_cast<std::size_t>(D));
  out.gamma.resize(m, D);
  for (long j = 0; j < D; ++j) {
    out.beta[static_cast<std::size_t>(j)] = ysd * w2(j);
    double bias = b1(j);
    for (int i = 0; i < m; ++i) {
      out.gamma(i, j) = W1(i, j) / xsd(i);
      bias -= W1(i, j) * xmean(i) / xsd(i);
    }
    out.gamma0[static_cast<std::size_t>(j)] = bias;
  }
  out.loss_trace = std::move(trace);
  out.quality = {loss * 2.0 * static_cast<double>(n) * ysd * ysd, static_cast<int>(n),
                 1 + hidden * (m + 2)};
  return out;
}

namespace {

// Natural cubic spline basis over fixed quantile knots for one lag column.
struct LagBasis {
  SplineSmoother smoother;  // knots + linear_only set; coefficients filled later
  std::size_t width = 0;    // basis functions contributed by this lag
};

LagBasis make_lag_basis(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const double range = values.back() - values.front();
  std::vector<double> knots;
  const std::size_t K = 7;
  for (std::size_t i = 0; i < K; ++i) {
    const double q = static_cast<double>(i) / static_cast<double>(K - 1);
    const double v = values[static_cast<std::size_t>(
        std::llround(q * static_cast<double>(values.size() - 1)))];
    if (knots.empty() || v - knots.back() > 1e-12 * (1.0 + range)) knots.push_back(v);
  }
  LagBasis out;
  out.smoother.knots = knots;
  out.smoother.linear_only = knots.size() < 3;
  out.width = out.smoother.linear_only ? 1 : knots.size() - 1;
  return out;
}

// Raw (un-centered) basis values for one lag at x: [x, N_1..N_{K-2}].
void fill_basis_row(const SplineSmoother& s, double x, double* dst) {
  dst[0] = x;
  if (s.linear_only || s.knots.size() < 3) return;
  const std::size_t K = s.knots.size();
  const double kappa_last = s.knots[K - 1];
  auto cube_plus = [](double v) { return v > 0.0 ? v * v * v : 0.0; };
  auto d = [&](std::size_t k) {
    return (cube_plus(x - s.knots[k]) - cube_plus(x - kappa_last)) / (kappa_last - s.knots[k]);
  };
  const double d_last = d(K - 2);
  for (std::size_t k = 0; k + 2 < K; ++k) dst[k + 1] = d(k) - d_last;
}

}  // namespace

AarParams fit_aar(const std::vector<double>& series, int m, int delay) {
  if (m < 1) throw config_error("fit_aar: m must be >= 1");
  const auto rows = lag_rows(series, static_cast<std::size_t>(m), delay, 0, "fit_aar");
  const long n = static_cast<long>(rows.rows);

  std::vector<LagBasis> bases;
  std::size_t total_width = 0;
  for (int j = 0; j < m; ++j) {
    std::vector<double> column(rows.rows);
    for (std::size_t r = 0; r < rows.rows; ++r)
      column[r] = series[rows.t0 + r - static_cast<std::size_t>(j) *
                                          static_cast<std::size_t>(delay)];
    bases.push_back(make_lag_basis(std::move(column)));
    total_width += bases.back().width;
  }

  Eigen::MatrixXd X(n, 1 + static_cast<long>(total_width));
  Eigen::VectorXd y(n);
  X.col(0).setOnes();
  for (long r = 0; r < n; ++r) {
    const std::size_t t = rows.t0 + static_cast<std::size_t>(r);
    y(r) = series[t + 1];
    long col = 1;
    double buffer[8];  // at most K-1 = 6 basis functions per lag
    for (int j = 0; j < m; ++j) {
      const LagBasis& basis = bases[static_cast<std::size_t>(j)];
      fill_basis_row(basis.smoother,
                     series[t - static_cast<std::size_t>(j) * static_cast<std::size_t>(delay)],
                     buffer);
      for (std::size_t b = 0; b < basis.width; ++b) X(r, col + static_cast<long>(b)) = buffer[b];
      col += static_cast<long>(basis.width);
    }
  }
  // Center every smoother column so the intercept carries the series level
  // and each fitted smoother averages to zero over the training rows.
  std::vector<double> col_means(total_width);
  for (std::size_t c = 0; c < total_width; ++c) {
    col_means[c] = X.col(1 + static_cast<long>(c)).mean();
    X.col(1 + static_cast<long>(c)).array() -= col_means[c];
  }

  const Eigen::VectorXd beta = solve_least_squares(X, y);
  AarParams out;
  out.mu = beta(0);
  out.m = m;
  out.delay = delay;
  long col = 1;
  std::size_t mean_idx = 0;
  for (int j = 0; j < m; ++j) {
    LagBasis& basis = bases[static_cast<std::size_t>(j)];
    basis.smoother.coefficients.assign(beta.data() + col,
                                       beta.data() + col + static_cast<long>(basis.width));
    basis.smoother.offsets.assign(col_means.begin() + static_cast<long>(mean_idx),
                                   col_means.begin() +
                                       static_cast<long>(mean_idx + basis.width));
    out.smoothers.push_back(std::move(basis.smoother));
    col += static_cast<long>(basis.width);
    mean_idx += basis.width;
  }
  out.quality = {residual_sse(X, y, beta), static_cast<int>(n),
                 1 + static_cast<int>(total_width)};
  return out;
}

double fit_arima011(const std::vector<double>& series) {
  if (series.size() < 4) throw data_error("fit_arima011: need at least 4 values");
  std::vector<double> diff(series.size() - 1);
  for (std::size_t i = 1; i < series.size(); ++i) diff[i - 1] = series[i] - series[i - 1];
  const auto sse_at = [&](double theta) {
    double e = 0.0, sse = 0.0;
    for (double d : diff) {
      e = d - theta * e;
      sse += e * e;
    }
    return sse;
  };
  double best_theta = 0.0, best_sse = sse_at(0.0);
  for (double theta = -0.95; theta <= 0.9501; theta += 0.01) {
    const double sse = sse_at(theta);
    if (sse < best_sse) {
      best_sse = sse;
      best_theta = theta;
    }
  }
  // Golden-section polish inside the winning grid cell.
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = std::max(-0.98, best_theta - 0.01), b = std::min(0.98, best_theta + 0.01);
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = sse_at(c), fd = sse_at(d);
  while (b - a > 1e-7) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = sse_at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = sse_at(d);
    }
  }
  return 0.5 * (a + b);
}

std::pair<double, double> information_criteria(double sse, int n, int k) {
  if (k < 1 || n <= k) throw config_error("information_criteria: need n > k >= 1");
  if (!(sse > 0.0)) throw config_error("information_criteria: need sse > 0");
  const double base = static_cast<double>(n) * std::log(sse / static_cast<double>(n));
  return {base + 2.0 * static_cast<double>(k),
          base + static_cast<double>(k) * std::log(static_cast<double>(n))};
}

// ---- fixtures --------------------------------------------------------------------

PortlandFixtures fixtures_from_json(const nlohmann::json& doc) {
  try {
    PortlandFixtures fx;
    fx.ar.intercept = doc.at("ar").at("intercept").get<double>();
    fx.ar.phi = doc.at("ar").at("phi").get<std::vector<double>>();
    fx.arima011_theta1 = doc.at("arima011").at("theta1").get<double>();

    const auto& lstar = doc.at("lstar");
    fx.lstar.low = regime_from_json(lstar.at("low"));
    fx.lstar.high = regime_from_json(lstar.at("high"));
    fx.lstar.threshold = lstar.at("threshold").get<double>();
    fx.lstar.gamma = lstar.at("gamma").get<double>();
    fx.lstar.delay = lstar.at("delay").get<int>();

    const auto& sarima = doc.at("sarima");
    fx.sarima.mu = sarima.at("mu").get<double>();
    fx.sarima.phi1 = sarima.at("phi1").get<double>();
    fx.sarima.theta = sarima.at("theta").get<std::vector<double>>();
    fx.sarima.seasonal_phi1 = sarima.at("seasonal_phi1").get<double>();
    fx.sarima.seasonal_theta = sarima.at("seasonal_theta").get<std::vector<double>>();
    fx.sarima.seasonal_period = 0;  // must come from configuration

    const auto& setar = doc.at("setar");
    fx.setar.low = regime_from_json(setar.at("low"));
    fx.setar.high = regime_from_json(setar.at("high"));
    fx.setar.threshold = setar.at("threshold").get<double>();
    fx.setar.delay = setar.at("delay").get<int>();
    fx.setar.low_fraction = setar.at("low_fraction").get<double>();
    return fx;
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("fixture document malformed: ") + e.what());
  }
}

PortlandFixtures portland_november_fixtures() {
  static const PortlandFixtures fx =
      fixtures_from_json(nlohmann::json::parse(kEmbeddedFixtureJson));
  return fx;
}

}  // namespace trafficfc

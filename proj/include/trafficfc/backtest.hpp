#pragma once

// Rolling one-step evaluation: a uniform forecaster interface over every
// model family, per-series backtests with persistence fallback, error
// metrics, and multi-model/multi-level experiment plans with combination
// rows and timing instrumentation.

#include <cstdint>
#include <json.hpp>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "trafficfc/combine.hpp"
#include "trafficfc/gp.hpp"
#include "trafficfc/series.hpp"

namespace trafficfc {

struct MetricsReport {
  double rmse = 0.0;
  double mae = 0.0;
  double mape = 0.0;  // percent; terms with a zero actual are skipped
  int n_forecasts = 0;
  int fallback_count = 0;
  int mape_skipped = 0;
};

// rmse/mae/mape over aligned actual/predicted pairs. Zero actuals are
// excluded from MAPE and counted in mape_skipped.
MetricsReport metrics(const std::vector<double>& actual, const std::vector<double>& predicted);

struct TimingReport {
  double train_seconds = 0.0;
  double predict_seconds_per_step = 0.0;
};

// A model that, given records [0..t] of a series, forecasts the target at
// t+1. Trained models are fit once via train(); rolling models refit inside
// forecast_at. forecast_at must not read past index t.
class OneStepForecaster {
 public:
  virtual ~OneStepForecaster() = default;
  virtual std::string name() const = 0;
  // Minimum number of records needed before the first forecast origin.
  virtual std::size_t min_history() const = 0;
  virtual bool needs_training() const { return false; }
  virtual void train(const ObservationSeries&) {}
  virtual double forecast_at(const ObservationSeries& series, std::size_t t) const = 0;
};

// Configuration for make_forecaster. `kind` selects the model family:
// persistence | gm11 | efgm | gvm | efgvm | ar | arima011 | sarima |
// setar | lstar | nnets | aar | gp.
struct ModelConfig {
  std::string kind = "persistence";
  int order = 3;                    // ar / setar / lstar lag coefficients
  int window = 4;                   // grey rolling window
  int lag_count = 3;                // gp lags
  std::set<Variable> exogenous;     // gp extra inputs at the forecast origin
  KernelFamily kernel = KernelFamily::linear;
  int gp_restarts = kDefaultGpRestarts;
  int m = 4;                        // nnets / aar embedding
  int hidden = 4;                   // nnets hidden units
  int seasonal_period = 0;          // sarima, required there
  int delay = 1;
  std::uint64_t seed = 0;           // nnets initialization / gp restart draws
};

std::unique_ptr<OneStepForecaster> make_forecaster(const ModelConfig& config);

struct BacktestResult {
  std::size_t first_origin = 0;   // first forecast origin t; predicts t+1
  std::vector<double> forecasts;  // one per origin t = first_origin .. n-2
  MetricsReport metrics;
  TimingReport timing;
};

// Forecast Z_{t+1} for every origin t = warmup .. n-2. A step that throws a
// data/numerical error or returns a non-finite value falls back to
// persistence and is counted. warmup+1 must cover the model's minimum
// history (config error otherwise); the series must allow at least one
// forecast (data error otherwise).
BacktestResult one_step_backtest(const OneStepForecaster& model,
                                 const ObservationSeries& series, std::size_t warmup);

struct PlannedModel {
  std::string label;
  ModelConfig config;
};

struct PlannedCombination {
  std::string label;
  std::string first;   // member model labels
  std::string second;
  double alpha = kDefaultCombinationAlpha;
  bool estimate = false;  // estimate alpha from backtests on the training series
};

struct ExperimentPlan {
  std::vector<PlannedModel> models;
  std::vector<int> levels;  // aggregation minutes
  std::vector<std::string> train_series;
  std::vector<std::string> test_series;
  std::vector<PlannedCombination> combinations;
  std::uint64_t seed = 0;
};

// Parse a benchmark plan document; throws config_error on malformed input,
// unknown model kinds, or duplicate/missing labels.
ExperimentPlan plan_from_json(const nlohmann::json& doc);

using DataStore = std::map<std::string, ObservationSeries>;

struct BacktestCell {
  std::string model;
  int level = 1;
  std::string series_id;
  std::size_t first_origin = 0;
  MetricsReport metrics;
  TimingReport timing;
  bool is_combination = false;
  double alpha = std::numeric_limits<double>::quiet_NaN();
  std::string alpha_source;  // "fixed" | "estimated" | "degenerate"
};

struct ExperimentReport {
  std::vector<BacktestCell> cells;  // canonical order: level, model, series

  // Deterministic outputs: timings are reported only by timings_csv so the
  // main report stays byte-stable across runs.
  std::string to_csv() const;
  nlohmann::json to_json() const;
  std::string timings_csv() const;
};

// Rebuild a report from its to_json() form (timings are not serialized
// there and come back zero). Throws config_error on malformed documents.
ExperimentReport report_from_json(const nlohmann::json& doc);

// Execute a plan: per (level, model) train once on the first training
// series, backtest every test series with a shared warmup so all models
// forecast identical index sets, then append combination rows. `threads`
// > 1 distributes (level, model) groups across a small pool; results are
// independent of the interleaving.
ExperimentReport run_experiment(const ExperimentPlan& plan, const DataStore& store,
                                int threads = 1);

struct TimingSummary {
  double mean_train_seconds = 0.0;
  double max_train_seconds = 0.0;
  double mean_predict_seconds_per_step = 0.0;
  double max_predict_seconds_per_step = 0.0;
  int cells = 0;
};

// Per-model aggregate over (non-combination) cells; models with no cells
// are absent rather than zero-filled.
std::map<std::string, TimingSummary> timing_summary(const ExperimentReport& report);

}  // namespace trafficfc

#include "trafficfc/backtest.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include "trafficfc/baselines.hpp"
#include "trafficfc/csv.hpp"
#include "trafficfc/errors.hpp"
#include "trafficfc/grey.hpp"

namespace trafficfc {

namespace {

using steady = std::chrono::steady_clock;

double seconds_since(steady::time_point start) {
  return std::chrono::duration<double>(steady::now() - start).count();
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Per-cell deterministic seed: plan seed, user model seed, and the cell's
// position all feed in, so reordering the plan changes nothing else.
std::uint64_t cell_seed(std::uint64_t plan_seed, std::uint64_t model_seed,
                        std::size_t model_index, int level) {
  std::uint64_t s = splitmix(plan_seed);
  s = splitmix(s ^ model_seed);
  s = splitmix(s ^ (static_cast<std::uint64_t>(model_index) + 1));
  s = splitmix(s ^ static_cast<std::uint64_t>(level));
  return s;
}

std::vector<double> speed_history(const ObservationSeries& series, std::size_t t) {
  std::vector<double> out;
  out.reserve(t + 1);
  for (std::size_t i = 0; i <= t; ++i) out.push_back(series.records[i].speed);
  return out;
}

// ---- forecaster implementations -------------------------------------------------

class PersistenceForecaster final : public OneStepForecaster {
 public:
  std::string name() const override { return "persistence"; }
  std::size_t min_history() const override { return 1; }
  double forecast_at(const ObservationSeries& series, std::size_t t) const override {
    return series.records[t].speed;
  }
};

class GreyForecaster final : public OneStepForecaster {
 public:
  GreyForecaster(GreyVariant variant, int window) : variant_(variant), window_(window) {
    if (window < 4) throw config_error("grey rolling window must be at least 4");
    if ((variant == GreyVariant::efgm || variant == GreyVariant::efgvm) && window < 7)
      throw config_error("error-corrected grey variants need a window of at least 7");
  }
  std::string name() const override { return grey_variant_name(variant_); }
  std::size_t min_history() const override { return static_cast<std::size_t>(window_); }
  double forecast_at(const ObservationSeries& series, std::size_t t) const override {
    const std::size_t w = static_cast<std::size_t>(window_);
    std::vector<double> window(w);
    for (std::size_t i = 0; i < w; ++i)
      window[i] = series.records[t + 1 - w + i].speed;
    return grey_window_forecast(window, variant_);
  }

 private:
  GreyVariant variant_;
  int window_;
};

class ArForecaster final : public OneStepForecaster {
 public:
  ArForecaster(int order, int delay) : order_(order), delay_(delay) {}
  std::string name() const override { return "ar"; }
  std::size_t min_history() const override {
    return static_cast<std::size_t>((order_ - 1) * delay_ + 1);
  }
  bool needs_training() const override { return true; }
  void train(const ObservationSeries& series) override {
    params_ = fit_ar(series.values(Variable::speed), order_, delay_);
  }
  double forecast_at(const ObservationSeries& series, std::size_t t) const override {
    return predict_ar(params_, speed_history(series, t));
  }

 private:
  int order_, delay_;
  ArParams params_;
};

class SetarForecaster final : public OneStepForecaster {
 public:
  SetarForecaster(int order, int delay) : order_(order), delay_(delay) {}
  std::string name() const override { return "setar"; }
  std::size_t min_history() const override {
    return static_cast<std::size_t>((order_ - 1) * delay_ + 1);
  }
  bool needs_training() const override { return true; }
  void train(const ObservationSeries& series) override {
    params_ = fit_setar(series.values(Variable::speed), order_, order_, delay_);
  }
  double forecast_at(const ObservationSeries& series, std::size_t t) const override {
    return predict_setar(params_, speed_history(series, t));
  }

 private:
  int order_, delay_;
  SetarParams params_;
};

class LstarForecaster final : public OneStepForecaster {
 public:
  LstarForecaster(int order, int delay) : order_(order), delay_(delay) {}
  std::string name() const override { return "lstar"; }
  std::size_t min_history() const override {
    return static_cast<std::size_t>(std::max((order_ - 1) * delay_ + 1, delay_ + 1));
  }
  bool needs_training() const override { return true; }
  void train(const ObservationSeries& series) override {
    params_ = fit_lstar(series.values(Variable::speed), order_, order_, delay_);
  }
  double forecast_at(const ObservationSeries& series, std::size_t t) const override {
    return predict_lstar(params_, speed_history(series, t));
  }

 private:
  int order_, delay_;
  LstarParams params_;
};

class Arima011Forecaster final : public OneStepForecaster {
 public:
  std::string name() const override { return "arima011"; }
  std::size_t min_history() const override { return 2; }
  bool needs_training() const override { return true; }
  void train(const ObservationSeries& series) override {
    theta1_ = fit_arima011(series.values(Variable::speed));
  }
  double forecast_at(const ObservationSeries& series, std::size_t t) const override {
    return predict_arima011(theta1_, speed_history(series, t));
  }

 private:
  double theta1_ = 0.0;
};

class SarimaForecaster final : public OneStepForecaster {
 public:
  explicit SarimaForecaster(int seasonal_period) {
    if (seasonal_period < 2)
      throw config_error("sarima requires a configured seasonal period (>= 2)");
    params_ = portland_november_fixtures().sarima;
    params_.seasonal_period = seasonal_period;
  }
  std::string name() const override { return "sarima"; }
  std::size_t min_history() const override {
    return static_cast<std::size_t>(params_.seasonal_period) + 3;
  }
  double forecast_at(const ObservationSeries& series, std::size_t t) const override {
    return predict_sarima_fixed(params_, speed_history(series, t));
  }

 private:
  SarimaParams params_;
};

class NnetsForecaster final : public OneStepForecaster {
 public:
  NnetsForecaster(int m, int hidden, int delay, std::uint64_t seed)
      : m_(m), hidden_(hidden), delay_(delay), seed_(seed) {}
  std::string name() const override { return "nnets"; }
  std::size_t min_history() const override {
    return static_cast<std::size_t>((m_ - 1) * delay_ + 1);
  }
  bool needs_training() const override { return true; }
  void train(const ObservationSeries& series) override {
    params_ = fit_nnets(series.values(Variable::speed), m_, hidden_, seed_, delay_);
  }
  double forecast_at(const ObservationSeries& series, std::size_t t) const override {
    return predict_nnets(params_, speed_history(series, t));
  }

 private:
  int m_, hidden_, delay_;
  std::uint64_t seed_;
  NnetsParams params_;
};

class AarForecaster final : public OneStepForecaster {
 public:
  AarForecaster(int m, int delay) : m_(m), delay_(delay) {}
  std::string name() const override { return "aar"; }
  std::size_t min_history() const override {
    return static_cast<std::size_t>((m_ - 1) * delay_ + 1);
  }
  bool needs_training() const override { return true; }
  void train(const ObservationSeries& series) override {
    params_ = fit_aar(series.values(Variable::speed), m_, delay_);
  }
  double forecast_at(const ObservationSeries& series, std::size_t t) const override {
    return predict_aar(params_, speed_history(series, t));
  }

 private:
  int m_, delay_;
  AarParams params_;
};

class GpForecaster final : public OneStepForecaster {
 public:
  GpForecaster(int lag_count, std::set<Variable> exogenous, KernelFamily kernel, int restarts,
               std::uint64_t seed)
      : lag_count_(lag_count),
        exogenous_(std::move(exogenous)),
        kernel_(kernel),
        restarts_(restarts),
        seed_(seed) {
    if (lag_count_ < 1) throw config_error("gp lag count must be >= 1");
  }
  std::string name() const override { return "gp"; }
  std::size_t min_history() const override { return static_cast<std::size_t>(lag_count_); }
  bool needs_training() const override { return true; }
  void train(const ObservationSeries& series) override {
    LagDesign design = lag_embed(series, lag_count_, exogenous_);
    // Center the inputs around their training means. The linear kernel has
    // no intercept, so on raw (far-from-zero) speeds the level offset would
    // eat the entire weight budget and the posterior would collapse toward
    // the training mean; centering makes persistence-like weights reachable.
    input_means_ = design.inputs.colwise().mean();
    design.inputs.rowwise() -= input_means_.transpose();
    model_ = fit_gp(design, kernel_, restarts_, seed_).first;
  }
  double forecast_at(const ObservationSeries& series, std::size_t t) const override {
    // Mirror the lag_embed row layout: current speed, exogenous readings at
    // the origin, then earlier speed lags.
    std::vector<double> x;
    x.reserve(static_cast<std::size_t>(lag_count_) + exogenous_.size());
    x.push_back(series.records[t].speed);
    for (Variable v : exogenous_) {
      if (!series.has(v))
        throw data_error(std::string("gp forecast: series lacks variable ") + variable_name(v));
      x.push_back(series.records[t].value(v));
    }
    for (int j = 1; j < lag_count_; ++j)
      x.push_back(series.records[t - static_cast<std::size_t>(j)].speed);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= input_means_(static_cast<long>(i));
    return model_.predict(x).mean;
  }

 private:
  int lag_count_;
  std::set<Variable> exogenous_;
  KernelFamily kernel_;
  int restarts_;
  std::uint64_t seed_;
  GpModel model_;
  Eigen::VectorXd input_means_;
};

}  // namespace

std::unique_ptr<OneStepForecaster> make_forecaster(const ModelConfig& config) {
  const std::string& kind = config.kind;
  if (kind == "persistence") return std::make_unique<PersistenceForecaster>();
  if (kind == "gm11" || kind == "efgm" || kind == "gvm" || kind == "efgvm")
    return std::make_unique<GreyForecaster>(grey_variant_from_name(kind), config.window);
  if (kind == "ar") return std::make_unique<ArForecaster>(config.order, config.delay);
  if (kind == "setar") return std::make_unique<SetarForecaster>(config.order, config.delay);
  if (kind == "lstar") return std::make_unique<LstarForecaster>(config.order, config.delay);
  if (kind == "arima011") return std::make_unique<Arima011Forecaster>();
  if (kind == "sarima") return std::make_unique<SarimaForecaster>(config.seasonal_period);
  if (kind == "nnets")
    return std::make_unique<NnetsForecaster>(config.m, config.hidden, config.delay, config.seed);
  if (kind == "aar") return std::make_unique<AarForecaster>(config.m, config.delay);
  if (kind == "gp")
    return std::make_unique<GpForecaster>(config.lag_count, config.exogenous, config.kernel,
                                          config.gp_restarts, config.seed);
  throw config_error("unknown model kind: " + kind);
}

MetricsReport metrics(const std::vector<double>& actual, const std::vector<double>& predicted) {
  if (actual.empty() || actual.size() != predicted.size())
    throw data_error("metrics: need nonempty, equal-length actual/predicted sequences");
  MetricsReport out;
  out.n_forecasts = static_cast<int>(actual.size());
  double sse = 0.0, sae = 0.0, sape = 0.0;
  int mape_terms = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double e = actual[i] - predicted[i];
    sse += e * e;
    sae += std::abs(e);
    if (actual[i] != 0.0) {
      sape += std::abs(e / actual[i]);
      ++mape_terms;
    } else {
      ++out.mape_skipped;
    }
  }
  const double n = static_cast<double>(actual.size());
  out.rmse = std::sqrt(sse / n);
  out.mae = sae / n;
  out.mape = mape_terms > 0 ? 100.0 * sape / static_cast<double>(mape_terms) : 0.0;
  return out;
}

BacktestResult one_step_backtest(const OneStepForecaster& model,
                                 const ObservationSeries& series, std::size_t warmup) {
  if (series.size() < warmup + 2) {
    std::ostringstream os;
    os << "backtest: series of " << series.size() << " records admits no forecast at warmup "
       << warmup;
    throw data_error(os.str());
  }
  if (warmup + 1 < model.min_history()) {
    std::ostringstream os;
    os << "backtest: warmup " << warmup << " is below the minimum history "
       << model.min_history() << " of model " << model.name();
    throw config_error(os.str());
  }

  BacktestResult out;
  out.first_origin = warmup;
  const std::size_t n = series.size();
  out.forecasts.reserve(n - 1 - warmup);
  std::vector<double> actuals;
  actuals.reserve(n - 1 - warmup);
  int fallbacks = 0;

  const auto start = steady::now();
  for (std::size_t t = warmup; t + 1 < n; ++t) {
    double f;
    try {
      f = model.forecast_at(series, t);
      if (!std::isfinite(f)) throw numerical_error("non-finite forecast");
    } catch (const numerical_error&) {
      f = series.records[t].speed;
      ++fallbacks;
    } catch (const data_error&) {
      f = series.records[t].speed;
      ++fallbacks;
    }
    out.forecasts.push_back(f);
    actuals.push_back(series.records[t + 1].speed);
  }
  const double elapsed = seconds_since(start);

  out.metrics = metrics(actuals, out.forecasts);
  out.metrics.fallback_count = fallbacks;
  out.timing.predict_seconds_per_step = elapsed / static_cast<double>(out.forecasts.size());
  return out;
}

// ---- plans ----------------------------------------------------------------------

namespace {

ModelConfig model_config_from_json(const nlohmann::json& doc) {
  ModelConfig config;
  config.kind = doc.at("kind").get<std::string>();
  if (doc.contains("order")) config.order = doc.at("order").get<int>();
  if (doc.contains("window")) config.window = doc.at("window").get<int>();
  if (doc.contains("lags")) config.lag_count = doc.at("lags").get<int>();
  if (doc.contains("exogenous"))
    for (const auto& name : doc.at("exogenous"))
      config.exogenous.insert(variable_from_name(name.get<std::string>()));
  if (doc.contains("kernel"))
    config.kernel = kernel_family_from_name(doc.at("kernel").get<std::string>());
  if (doc.contains("restarts")) config.gp_restarts = doc.at("restarts").get<int>();
  if (doc.contains("m")) config.m = doc.at("m").get<int>();
  if (doc.contains("hidden")) config.hidden = doc.at("hidden").get<int>();
  if (doc.contains("seasonal_period"))
    config.seasonal_period = doc.at("seasonal_period").get<int>();
  if (doc.contains("delay")) config.delay = doc.at("delay").get<int>();
  if (doc.contains("seed")) config.seed = doc.at("seed").get<std::uint64_t>();
  return config;
}

}  // namespace

ExperimentPlan plan_from_json(const nlohmann::json& doc) {
  try {
    ExperimentPlan plan;
    if (doc.contains("seed")) plan.seed = doc.at("seed").get<std::uint64_t>();
    plan.levels = doc.at("levels").get<std::vector<int>>();
    if (doc.contains("train")) plan.train_series = doc.at("train").get<std::vector<std::string>>();
    plan.test_series = doc.at("test").get<std::vector<std::string>>();
    std::set<std::string> labels;
    for (const auto& m : doc.at("models")) {
      PlannedModel pm;
      pm.label = m.at("label").get<std::string>();
      pm.config = model_config_from_json(m);
      if (!labels.insert(pm.label).second)
        throw config_error("plan: duplicate model label " + pm.label);
      plan.models.push_back(std::move(pm));
    }
    if (doc.contains("combinations")) {
      for (const auto& c : doc.at("combinations")) {
        PlannedCombination pc;
        pc.label = c.at("label").get<std::string>();
        pc.first = c.at("first").get<std::string>();
        pc.second = c.at("second").get<std::string>();
        if (c.contains("alpha")) pc.alpha = c.at("alpha").get<double>();
        if (c.contains("estimate")) pc.estimate = c.at("estimate").get<bool>();
        if (!labels.count(pc.first) || !labels.count(pc.second))
          throw config_error("plan: combination " + pc.label + " references unknown model labels");
        if (!labels.insert(pc.label).second)
          throw config_error("plan: duplicate model label " + pc.label);
        plan.combinations.push_back(std::move(pc));
      }
    }
    if (plan.models.empty()) throw config_error("plan: at least one model required");
    if (plan.levels.empty()) throw config_error("plan: at least one aggregation level required");
    if (plan.test_series.empty()) throw config_error("plan: at least one test series required");
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("plan document malformed: ") + e.what());
  }
}

// ---- experiments -----------------------------------------------------------------

namespace {

const ObservationSeries& store_lookup(const DataStore& store, const std::string& id) {
  const auto it = store.find(id);
  if (it == store.end()) throw data_error("series not found in data store: " + id);
  return it->second;
}

struct GroupResult {
  // One (level, model) group: trained forecaster + per-test-series results.
  std::unique_ptr<OneStepForecaster> forecaster;
  double train_seconds = 0.0;
  std::vector<BacktestResult> per_series;  // parallel to plan.test_series
};

std::string csv_quote(const std::string& s) {
  // Labels and ids stay on one CSV token; commas/quotes are escaped.
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    out += c;
  }
  out += "\"";
  return out;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentPlan& plan, const DataStore& store,
                                int threads) {
  if (plan.models.empty() || plan.levels.empty() || plan.test_series.empty())
    throw config_error("experiment plan is incomplete");

  // Aggregate every referenced series once per level.
  std::map<int, std::map<std::string, ObservationSeries>> at_level;
  std::set<std::string> ids(plan.test_series.begin(), plan.test_series.end());
  ids.insert(plan.train_series.begin(), plan.train_series.end());
  for (int level : plan.levels) {
    const AggregationLevel agg = AggregationLevel::of(level);
    for (const std::string& id : ids)
      at_level[level].emplace(id, aggregate(store_lookup(store, id), agg));
  }

  const bool needs_training =
      std::any_of(plan.models.begin(), plan.models.end(),
                  [](const PlannedModel& pm) {
                    return make_forecaster(pm.config)->needs_training();
                  });
  if (needs_training && plan.train_series.empty())
    throw config_error("plan has trained models but no training series");

  // One group per (level, model), executed independently.
  struct GroupKey {
    int level_idx;
    std::size_t model_idx;
  };
  std::vector<GroupKey> keys;
  for (std::size_t li = 0; li < plan.levels.size(); ++li)
    for (std::size_t mi = 0; mi < plan.models.size(); ++mi)
      keys.push_back({static_cast<int>(li), mi});
  std::vector<GroupResult> groups(keys.size());

  // Shared warmup per level so every model forecasts the same index set.
  std::vector<std::size_t> warmup_by_level(plan.levels.size(), 0);
  for (std::size_t li = 0; li < plan.levels.size(); ++li) {
    std::size_t max_min_history = 1;
    for (const PlannedModel& pm : plan.models)
      max_min_history = std::max(max_min_history, make_forecaster(pm.config)->min_history());
    warmup_by_level[li] = max_min_history - 1;
  }

  auto run_group = [&](std::size_t gi) {
    const GroupKey key = keys[gi];
    const int level = plan.levels[static_cast<std::size_t>(key.level_idx)];
    const PlannedModel& pm = plan.models[key.model_idx];
    ModelConfig config = pm.config;
    config.seed = cell_seed(plan.seed, pm.config.seed, key.model_idx, level);
    GroupResult& group = groups[gi];
    group.forecaster = make_forecaster(config);
    if (group.forecaster->needs_training()) {
      const ObservationSeries& train =
          at_level.at(level).at(plan.train_series.front());
      const auto start = steady::now();
      group.forecaster->train(train);
      group.train_seconds = seconds_since(start);
    }
    for (const std::string& id : plan.test_series)
      group.per_series.push_back(one_step_backtest(
          *group.forecaster, at_level.at(level).at(id),
          warmup_by_level[static_cast<std::size_t>(key.level_idx)]));
  };

  if (threads > 1 && keys.size() > 1) {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(
        static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(threads),
                                                       keys.size())));
    for (std::size_t w = 0; w < errors.size(); ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t gi = next.fetch_add(1); gi < keys.size(); gi = next.fetch_add(1)) {
          try {
            run_group(gi);
          } catch (...) {
            errors[w] = std::current_exception();
            return;
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& err : errors)
      if (err) std::rethrow_exception(err);
  } else {
    for (std::size_t gi = 0; gi < keys.size(); ++gi) run_group(gi);
  }

  ExperimentReport report;
  for (std::size_t gi = 0; gi < keys.size(); ++gi) {
    const GroupKey key = keys[gi];
    const PlannedModel& pm = plan.models[key.model_idx];
    for (std::size_t si = 0; si < plan.test_series.size(); ++si) {
      const BacktestResult& r = groups[gi].per_series[si];
      BacktestCell cell;
      cell.model = pm.label;
      cell.level = plan.levels[static_cast<std::size_t>(key.level_idx)];
      cell.series_id = plan.test_series[si];
      cell.first_origin = r.first_origin;
      cell.metrics = r.metrics;
      cell.timing = r.timing;
      cell.timing.train_seconds = groups[gi].train_seconds;
      report.cells.push_back(std::move(cell));
    }
  }

  // Combination rows reuse the member forecasts; estimated weights come
  // from member backtests on the training series at the same level.
  auto group_of = [&](const std::string& label, std::size_t level_idx) -> std::size_t {
    for (std::size_t gi = 0; gi < keys.size(); ++gi)
      if (plan.models[keys[gi].model_idx].label == label &&
          keys[gi].level_idx == static_cast<int>(level_idx))
        return gi;
    throw config_error("combination references unknown model label: " + label);
  };
  for (const PlannedCombination& pc : plan.combinations) {
    for (std::size_t li = 0; li < plan.levels.size(); ++li) {
      const int level = plan.levels[li];
      const std::size_t g1 = group_of(pc.first, li), g2 = group_of(pc.second, li);
      CombinationWeight weight;
      if (pc.estimate) {
        if (plan.train_series.empty())
          throw config_error("estimated combination weights need a training series");
        const ObservationSeries& train = at_level.at(level).at(plan.train_series.front());
        const auto r1 = one_step_backtest(*groups[g1].forecaster, train, warmup_by_level[li]);
        const auto r2 = one_step_backtest(*groups[g2].forecaster, train, warmup_by_level[li]);
        std::vector<double> e1(r1.forecasts.size()), e2(r2.forecasts.size());
        for (std::size_t i = 0; i < r1.forecasts.size(); ++i) {
          const double actual = train.records[r1.first_origin + 1 + i].speed;
          e1[i] = actual - r1.forecasts[i];
          e2[i] = actual - r2.forecasts[i];
        }
        weight = optimal_alpha(e1, e2);
      } else {
        weight.alpha = pc.alpha;
        weight.source = CombinationWeight::Source::fixed;
      }

      for (std::size_t si = 0; si < plan.test_series.size(); ++si) {
        const BacktestResult& r1 = groups[g1].per_series[si];
        const BacktestResult& r2 = groups[g2].per_series[si];
        const std::vector<double> combined =
            combine(r1.forecasts, r2.forecasts, weight.alpha);
        const ObservationSeries& test =
            at_level.at(level).at(plan.test_series[si]);
        std::vector<double> actual(combined.size());
        for (std::size_t i = 0; i < combined.size(); ++i)
          actual[i] = test.records[r1.first_origin + 1 + i].speed;

        BacktestCell cell;
        cell.model = pc.label;
        cell.level = level;
        cell.series_id = plan.test_series[si];
        cell.first_origin = r1.first_origin;
        cell.metrics = metrics(actual, combined);
        cell.metrics.fallback_count =
            r1.metrics.fallback_count + r2.metrics.fallback_count;
        cell.timing.train_seconds = 0.0;
        cell.timing.predict_seconds_per_step = r1.timing.predict_seconds_per_step +
                                               r2.timing.predict_seconds_per_step;
        cell.is_combination = true;
        cell.alpha = weight.alpha;
        cell.alpha_source = weight.degenerate ? "degenerate"
                            : weight.source == CombinationWeight::Source::fixed ? "fixed"
                                                                                : "estimated";
        report.cells.push_back(std::move(cell));
      }
    }
  }

  std::sort(report.cells.begin(), report.cells.end(),
            [](const BacktestCell& a, const BacktestCell& b) {
              if (a.level != b.level) return a.level < b.level;
              if (a.model != b.model) return a.model < b.model;
              return a.series_id < b.series_id;
            });
  return report;
}

std::string ExperimentReport::to_csv() const {
  std::string out =
      "model,level_minutes,series,first_origin,n_forecasts,rmse,mae,mape_percent,"
      "mape_skipped,fallbacks,alpha,alpha_source\n";
  for (const BacktestCell& c : cells) {
    out += csv_quote(c.model);
    out += ',';
    out += std::to_string(c.level);
    out += ',';
    out += csv_quote(c.series_id);
    out += ',';
    out += std::to_string(c.first_origin);
    out += ',';
    out += std::to_string(c.metrics.n_forecasts);
    out += ',';
    out += format_double(c.metrics.rmse);
    out += ',';
    out += format_double(c.metrics.mae);
    out += ',';
    out += format_double(c.metrics.mape);
    out += ',';
    out += std::to_string(c.metrics.mape_skipped);
    out += ',';
    out += std::to_string(c.metrics.fallback_count);
    out += ',';
    if (c.is_combination) out += format_double(c.alpha);
    out += ',';
    out += c.alpha_source;
    out += '\n';
  }
  return out;
}

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json cells_json = nlohmann::json::array();
  for (const BacktestCell& c : cells) {
    nlohmann::json j{{"model", c.model},
                     {"level_minutes", c.level},
                     {"series", c.series_id},
                     {"first_origin", c.first_origin},
                     {"n_forecasts", c.metrics.n_forecasts},
                     {"rmse", c.metrics.rmse},
                     {"mae", c.metrics.mae},
                     {"mape_percent", c.metrics.mape},
                     {"mape_skipped", c.metrics.mape_skipped},
                     {"fallbacks", c.metrics.fallback_count}};
    if (c.is_combination) {
      j["alpha"] = c.alpha;
      j["alpha_source"] = c.alpha_source;
    }
    cells_json.push_back(std::move(j));
  }
  return nlohmann::json{{"cells", std::move(cells_json)}};
}

std::string ExperimentReport::timings_csv() const {
  std::string out = "model,level_minutes,series,train_seconds,predict_seconds_per_step\n";
  for (const BacktestCell& c : cells) {
    out += csv_quote(c.model);
    out += ',';
    out += std::to_string(c.level);
    out += ',';
    out += csv_quote(c.series_id);
    out += ',';
    out += format_double(c.timing.train_seconds);
    out += ',';
    out += format_double(c.timing.predict_seconds_per_step);
    out += '\n';
  }
  return out;
}

ExperimentReport report_from_json(const nlohmann::json& doc) {
  ExperimentReport report;
  try {
    for (const nlohmann::json& j : doc.at("cells")) {
      BacktestCell c;
      c.model = j.at("model").get<std::string>();
      c.level = j.at("level_minutes").get<int>();
      c.series_id = j.at("series").get<std::string>();
      c.first_origin = j.at("first_origin").get<std::size_t>();
      c.metrics.n_forecasts = j.at("n_forecasts").get<int>();
      c.metrics.rmse = j.at("rmse").get<double>();
      c.metrics.mae = j.at("mae").get<double>();
      c.metrics.mape = j.at("mape_percent").get<double>();
      c.metrics.mape_skipped = j.at("mape_skipped").get<int>();
      c.metrics.fallback_count = j.at("fallbacks").get<int>();
      if (j.contains("alpha")) {
        c.is_combination = true;
        c.alpha = j.at("alpha").get<double>();
        c.alpha_source = j.at("alpha_source").get<std::string>();
      }
      report.cells.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("malformed report document: ") + e.what());
  }
  return report;
}

std::map<std::string, TimingSummary> timing_summary(const ExperimentReport& report) {
  std::map<std::string, TimingSummary> out;
  for (const BacktestCell& c : report.cells) {
    if (c.is_combination) continue;
    TimingSummary& s = out[c.model];
    s.mean_train_seconds += c.timing.train_seconds;
    s.max_train_seconds = std::max(s.max_train_seconds, c.timing.train_seconds);
    s.mean_predict_seconds_per_step += c.timing.predict_seconds_per_step;
    s.max_predict_seconds_per_step =
        std::max(s.max_predict_seconds_per_step, c.timing.predict_seconds_per_step);
    ++s.cells;
  }
  for (auto& [model, s] : out) {
    s.mean_train_seconds /= static_cast<double>(s.cells);
    s.mean_predict_seconds_per_step /= static_cast<double>(s.cells);
  }
  return out;
}

}  // namespace trafficfc

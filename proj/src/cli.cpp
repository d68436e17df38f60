#include "trafficfc/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "trafficfc/backtest.hpp"
#include "trafficfc/baselines.hpp"
#include "trafficfc/combine.hpp"
#include "trafficfc/csv.hpp"
#include "trafficfc/errors.hpp"
#include "trafficfc/gp.hpp"
#include "trafficfc/grey.hpp"
#include "trafficfc/ingest.hpp"
#include "trafficfc/plots.hpp"
#include "trafficfc/series.hpp"

namespace trafficfc {

namespace {

namespace fs = std::filesystem;

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw config_error(path + ": " + e.what());
  }
}

// Resolve a path found inside a spec file relative to that file's directory.
std::string resolve_relative(const std::string& path, const std::string& spec_path) {
  fs::path p(path);
  if (p.is_absolute()) return path;
  return (fs::path(spec_path).parent_path() / p).string();
}

// Load a canonical series CSV, fill any unreadable stretches, and bring it
// to the requested aggregation level (0 keeps the file's native interval).
ObservationSeries load_input_series(const std::string& path, int agg_minutes) {
  ObservationSeries series = load_series_csv(path);
  for (const ObservationRecord& r : series.records) {
    if (r.missing) {
      series = interpolate_missing(series);
      break;
    }
  }
  if (agg_minutes > 0) series = aggregate(series, AggregationLevel::of(agg_minutes));
  return series;
}

// ---- shared model flags -------------------------------------------------------

struct ModelOptions {
  ModelConfig config;
  std::vector<std::string> exogenous;
  std::string kernel = "linear";
};

void add_model_options(CLI::App* cmd, ModelOptions& opts) {
  cmd->add_option("--model", opts.config.kind,
                  "model kind: persistence|gm11|efgm|gvm|efgvm|ar|arima011|sarima|"
                  "setar|lstar|nnets|aar|gp")
      ->required();
  cmd->add_option("--order", opts.config.order, "autoregressive order (ar/setar/lstar)");
  cmd->add_option("--window", opts.config.window, "grey rolling window length");
  cmd->add_option("--lags", opts.config.lag_count, "gp speed lag count");
  cmd->add_option("--exog", opts.exogenous,
                  "gp exogenous input (flow or occupancy); repeatable");
  cmd->add_option("--kernel", opts.kernel,
                  "gp kernel: power_exponential|rational_quadratic|linear");
  cmd->add_option("--restarts", opts.config.gp_restarts, "gp optimizer starts");
  cmd->add_option("--m", opts.config.m, "embedding dimension (nnets/aar)");
  cmd->add_option("--hidden", opts.config.hidden, "nnets hidden units");
  cmd->add_option("--seasonal-period", opts.config.seasonal_period,
                  "sarima seasonal period (required for sarima)");
  cmd->add_option("--delay", opts.config.delay, "lag spacing");
  cmd->add_option("--seed", opts.config.seed, "random seed");
}

ModelConfig resolve_model(const ModelOptions& opts) {
  ModelConfig config = opts.config;
  config.kernel = kernel_family_from_name(opts.kernel);
  config.exogenous.clear();
  for (const std::string& name : opts.exogenous)
    config.exogenous.insert(variable_from_name(name));
  return config;
}

// ---- ingest -------------------------------------------------------------------

struct IngestArgs {
  std::vector<std::string> loop_specs;
  std::vector<std::string> probe_specs;
  bool keep_missing = false;
  double flat_noise_sd = 0.0;
  std::uint64_t flat_noise_seed = 0;
  int agg_minutes = 0;
  std::string out;
};

void run_ingest(const IngestArgs& args) {
  if (args.loop_specs.empty() == args.probe_specs.empty())
    throw config_error("ingest needs either --loop or --probe spec files (not both)");

  std::vector<ObservationSeries> parts;
  for (const std::string& spec_path : args.loop_specs) {
    LoopFileSpec spec = loop_spec_from_json(read_json_file(spec_path));
    spec.path = resolve_relative(spec.path, spec_path);
    parts.push_back(load_loop_csv(spec));
  }
  for (const std::string& spec_path : args.probe_specs) {
    ProbeFileSpec spec = probe_spec_from_json(read_json_file(spec_path));
    spec.path = resolve_relative(spec.path, spec_path);
    parts.push_back(load_probe_csv(spec));
  }
  ObservationSeries series = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) series = concat_chains(series, parts[i]);

  if (!args.keep_missing) series = interpolate_missing(series);
  if (args.flat_noise_sd > 0.0) {
    if (args.keep_missing)
      throw config_error("--flat-noise requires interpolated (gap-free) data");
    series = inject_flat_line_noise(series, Variable::speed, args.flat_noise_sd,
                                    args.flat_noise_seed);
  }
  if (args.agg_minutes > 0) series = aggregate(series, AggregationLevel::of(args.agg_minutes));
  write_series_csv(series, args.out);
}

// ---- synth -------------------------------------------------------------------

struct SynthArgs {
  std::string profile;
  std::optional<std::uint64_t> seed;
  int agg_minutes = 0;
  std::string out;
};

void run_synth(const SynthArgs& args) {
  SynthProfile profile = synth_profile_from_json(read_json_file(args.profile));
  if (args.seed) profile.seed = *args.seed;
  ObservationSeries series = generate_synthetic(profile);
  if (args.agg_minutes > 0) series = aggregate(series, AggregationLevel::of(args.agg_minutes));
  write_series_csv(series, args.out);
}

// ---- fit ----------------------------------------------------------------------

struct FitArgs {
  ModelOptions model;
  std::string input;
  int agg_minutes = 0;
  std::string out;
};

nlohmann::json quality_json(const FitQuality& q) {
  nlohmann::json j{{"sse", q.sse}, {"n", q.n}, {"k", q.k}};
  if (q.n > q.k && q.k >= 1 && q.sse > 0.0) {
    const auto [aic, bic] = information_criteria(q.sse, q.n, q.k);
    j["aic"] = aic;
    j["bic"] = bic;
  }
  return j;
}

nlohmann::json regime_json(const RegimeParams& r) {
  return {{"intercept", r.intercept}, {"phi", r.phi}};
}

void run_fit(const FitArgs& args) {
  const ModelConfig config = resolve_model(args.model);
  const ObservationSeries series = load_input_series(args.input, args.agg_minutes);
  const std::vector<double> values = series.values(Variable::speed);

  nlohmann::json out{{"kind", config.kind},
                     {"series", series.series_id},
                     {"level_minutes",
                      args.agg_minutes > 0 ? args.agg_minutes
                                           : static_cast<int>(series.base_interval / 60)}};
  if (config.kind == "ar") {
    const ArParams p = fit_ar(values, config.order, config.delay);
    out["intercept"] = p.intercept;
    out["phi"] = p.phi;
    out["delay"] = p.delay;
    out["quality"] = quality_json(p.quality);
  } else if (config.kind == "setar") {
    const SetarParams p = fit_setar(values, config.order, config.order, config.delay);
    out["low"] = regime_json(p.low);
    out["high"] = regime_json(p.high);
    out["threshold"] = p.threshold;
    out["delay"] = p.delay;
    out["low_fraction"] = p.low_fraction;
    out["quality"] = quality_json(p.quality);
  } else if (config.kind == "lstar") {
    const LstarParams p = fit_lstar(values, config.order, config.order, config.delay);
    out["low"] = regime_json(p.low);
    out["high"] = regime_json(p.high);
    out["threshold"] = p.threshold;
    out["gamma"] = p.gamma;
    out["delay"] = p.delay;
    out["quality"] = quality_json(p.quality);
  } else if (config.kind == "arima011") {
    out["theta1"] = fit_arima011(values);
  } else if (config.kind == "nnets") {
    const NnetsParams p = fit_nnets(values, config.m, config.hidden, config.seed, config.delay);
    out["m"] = p.m;
    out["hidden"] = p.D;
    out["delay"] = p.delay;
    out["beta0"] = p.beta0;
    out["beta"] = p.beta;
    out["gamma0"] = p.gamma0;
    nlohmann::json gamma = nlohmann::json::array();
    for (int i = 0; i < p.gamma.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (int j = 0; j < p.gamma.cols(); ++j) row.push_back(p.gamma(i, j));
      gamma.push_back(std::move(row));
    }
    out["gamma"] = std::move(gamma);
    out["quality"] = quality_json(p.quality);
  } else if (config.kind == "aar") {
    const AarParams p = fit_aar(values, config.m, config.delay);
    out["mu"] = p.mu;
    out["m"] = p.m;
    out["delay"] = p.delay;
    nlohmann::json smoothers = nlohmann::json::array();
    for (const SplineSmoother& s : p.smoothers)
      smoothers.push_back({{"knots", s.knots},
                           {"coefficients", s.coefficients},
                           {"offsets", s.offsets},
                           {"linear_only", s.linear_only}});
    out["smoothers"] = std::move(smoothers);
    out["quality"] = quality_json(p.quality);
  } else if (config.kind == "gm11" || config.kind == "gvm") {
    GreyWindow window{values};
    const GreyFit fit =
        config.kind == "gm11" ? fit_gm11(window) : fit_gvm(window);
    out["a"] = fit.a;
    out["b"] = fit.b;
    out["x0_1"] = fit.x0_1;
  } else if (config.kind == "efgm" || config.kind == "efgvm") {
    throw config_error(
        "error-corrected grey variants refit per window; use forecast or backtest");
  } else if (config.kind == "gp") {
    const LagDesign design = lag_embed(series, config.lag_count, config.exogenous);
    const auto [model, report] =
        fit_gp(design, config.kernel, config.gp_restarts, config.seed);
    out["gp"] = model.to_json();
    out["fit"] = {{"final_nlml", report.final_nlml},
                  {"restarts_used", report.restarts_used},
                  {"optimizer_iterations", report.optimizer_iterations}};
  } else if (config.kind == "sarima") {
    throw config_error("sarima runs with fixed published parameters; nothing to fit");
  } else if (config.kind == "persistence") {
    throw config_error("persistence has no parameters to fit");
  } else {
    throw config_error("unknown model kind: " + config.kind);
  }

  write_file_atomic(args.out, out.dump(2) + "\n");
}

// ---- forecast / backtest -------------------------------------------------------

struct EvalArgs {
  ModelOptions model;
  std::string input;
  std::string train;
  int agg_minutes = 0;
  std::optional<std::size_t> warmup;
  std::string out;
  std::string timings_out;  // backtest only; separate because never deterministic
};

BacktestResult run_eval(const EvalArgs& args, const ObservationSeries& series,
                        std::unique_ptr<OneStepForecaster>& model_out) {
  const ModelConfig config = resolve_model(args.model);
  std::unique_ptr<OneStepForecaster> model = make_forecaster(config);
  if (model->needs_training()) {
    if (args.train.empty())
      throw config_error(config.kind + " needs --train with a training series");
    model->train(load_input_series(args.train, args.agg_minutes));
  }
  const std::size_t warmup = args.warmup ? *args.warmup : model->min_history() - 1;
  BacktestResult result = one_step_backtest(*model, series, warmup);
  model_out = std::move(model);
  return result;
}

void run_forecast(const EvalArgs& args) {
  const ObservationSeries series = load_input_series(args.input, args.agg_minutes);
  std::unique_ptr<OneStepForecaster> model;
  const BacktestResult result = run_eval(args, series, model);

  std::string csv = "timestamp,actual,forecast\n";
  for (std::size_t i = 0; i < result.forecasts.size(); ++i) {
    const ObservationRecord& target = series.records[result.first_origin + 1 + i];
    csv += std::to_string(target.timestamp);
    csv += ',';
    csv += format_double(target.speed);
    csv += ',';
    csv += format_double(result.forecasts[i]);
    csv += '\n';
  }
  write_file_atomic(args.out, csv);
}

void run_backtest(const EvalArgs& args) {
  const ObservationSeries series = load_input_series(args.input, args.agg_minutes);
  std::unique_ptr<OneStepForecaster> model;
  const BacktestResult result = run_eval(args, series, model);

  const nlohmann::json out{{"model", model->name()},
                           {"series", series.series_id},
                           {"first_origin", result.first_origin},
                           {"n_forecasts", result.metrics.n_forecasts},
                           {"rmse", result.metrics.rmse},
                           {"mae", result.metrics.mae},
                           {"mape_percent", result.metrics.mape},
                           {"mape_skipped", result.metrics.mape_skipped},
                           {"fallbacks", result.metrics.fallback_count}};
  write_file_atomic(args.out, out.dump(2) + "\n");
  if (!args.timings_out.empty()) {
    std::string csv = "train_seconds,predict_seconds_per_step\n";
    csv += format_double(result.timing.train_seconds);
    csv += ',';
    csv += format_double(result.timing.predict_seconds_per_step);
    csv += '\n';
    write_file_atomic(args.timings_out, csv);
  }
}

// ---- benchmark / report ---------------------------------------------------------

struct BenchmarkArgs {
  std::string plan;
  std::string data_dir;
  std::string out_dir;
};

int env_thread_count() {
  const char* raw = std::getenv("TRAFFICFC_THREADS");
  if (raw == nullptr || *raw == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(raw, &end, 10);
  if (end == raw || *end != '\0' || v < 1 || v > 256)
    throw config_error(std::string("TRAFFICFC_THREADS must be a count, got \"") + raw + "\"");
  return static_cast<int>(v);
}

// A plan file may carry its own data sources:
//   "data": { "<id>": "relative/path.csv"
//           | { "csv": "path.csv" }
//           | { "synth": { ...profile... } } }
// Ids not listed there fall back to <data_dir>/<id>.csv.
DataStore load_plan_data(const nlohmann::json& doc, const ExperimentPlan& plan,
                         const BenchmarkArgs& args) {
  std::set<std::string> wanted(plan.test_series.begin(), plan.test_series.end());
  wanted.insert(plan.train_series.begin(), plan.train_series.end());

  DataStore store;
  const nlohmann::json sources =
      doc.contains("data") ? doc.at("data") : nlohmann::json::object();
  if (!sources.is_object()) throw config_error("plan \"data\" must be an object");
  for (const std::string& id : wanted) {
    try {
      if (sources.contains(id)) {
        const nlohmann::json& src = sources.at(id);
        if (src.is_string()) {
          store.emplace(id, load_series_csv(
                                resolve_relative(src.get<std::string>(), args.plan), id));
        } else if (src.contains("csv")) {
          store.emplace(id, load_series_csv(
                                resolve_relative(src.at("csv").get<std::string>(), args.plan),
                                id));
        } else if (src.contains("synth")) {
          SynthProfile profile = synth_profile_from_json(src.at("synth"));
          profile.series_id = id;
          store.emplace(id, generate_synthetic(profile));
        } else {
          throw config_error("data source for \"" + id + "\" needs \"csv\" or \"synth\"");
        }
      } else if (!args.data_dir.empty()) {
        store.emplace(id, load_series_csv((fs::path(args.data_dir) / (id + ".csv")).string(), id));
      } else {
        throw data_error("no data source for series \"" + id + "\"");
      }
    } catch (const nlohmann::json::exception& e) {
      throw config_error("data source for \"" + id + "\": " + e.what());
    }
    // Model code assumes gap-free series.
    ObservationSeries& series = store.at(id);
    for (const ObservationRecord& r : series.records) {
      if (r.missing) {
        series = interpolate_missing(series);
        break;
      }
    }
  }
  return store;
}

void write_report_files(const ExperimentReport& report, const std::string& out_dir,
                        const std::string& timings) {
  write_file_atomic((fs::path(out_dir) / "report.csv").string(), report.to_csv());
  write_file_atomic((fs::path(out_dir) / "report.json").string(),
                    report.to_json().dump(2) + "\n");
  if (!timings.empty())
    write_file_atomic((fs::path(out_dir) / "timings.csv").string(), timings);
  emit_plots(report, out_dir);
}

void run_benchmark(const BenchmarkArgs& args) {
  const nlohmann::json doc = read_json_file(args.plan);
  const ExperimentPlan plan = plan_from_json(doc);
  const DataStore store = load_plan_data(doc, plan, args);
  const ExperimentReport report = run_experiment(plan, store, env_thread_count());
  write_report_files(report, args.out_dir, report.timings_csv());
}

struct ReportArgs {
  std::string input;
  std::string out_dir;
};

void run_report(const ReportArgs& args) {
  const ExperimentReport report = report_from_json(read_json_file(args.input));
  if (report.cells.empty()) throw data_error(args.input + ": report has no cells");
  write_report_files(report, args.out_dir, "");  // timings are not serialized
}

// ---- combine -------------------------------------------------------------------

struct CombineArgs {
  std::string first;
  std::string second;
  double alpha = kDefaultCombinationAlpha;
  bool estimate = false;
  std::string out;
};

struct ForecastColumns {
  std::vector<std::int64_t> timestamps;
  std::vector<double> actual;
  std::vector<double> forecast;
};

ForecastColumns read_forecast_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const int t_col = table.column("timestamp");
  const int a_col = table.column("actual");
  const int f_col = table.column("forecast");
  if (t_col < 0 || a_col < 0 || f_col < 0)
    throw data_error(path + ": expected timestamp,actual,forecast columns");
  ForecastColumns out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    double a = 0.0, f = 0.0;
    try {
      out.timestamps.push_back(std::stoll(row[t_col]));
    } catch (const std::exception&) {
      throw data_error(path + ": bad timestamp in row " + std::to_string(i + 2));
    }
    if (!parse_double_cell(row[a_col], a) || !parse_double_cell(row[f_col], f))
      throw data_error(path + ": bad numeric cell in row " + std::to_string(i + 2));
    out.actual.push_back(a);
    out.forecast.push_back(f);
  }
  if (out.timestamps.empty()) throw data_error(path + ": no forecast rows");
  return out;
}

void run_combine(const CombineArgs& args) {
  const ForecastColumns first = read_forecast_csv(args.first);
  const ForecastColumns second = read_forecast_csv(args.second);
  if (first.timestamps != second.timestamps)
    throw data_error("forecast files cover different timestamps");
  if (first.actual != second.actual)
    throw data_error("forecast files disagree on actual values");

  double alpha = args.alpha;
  std::string source = "fixed";
  if (args.estimate) {
    std::vector<double> e1(first.actual.size()), e2(first.actual.size());
    for (std::size_t i = 0; i < first.actual.size(); ++i) {
      e1[i] = first.actual[i] - first.forecast[i];
      e2[i] = second.actual[i] - second.forecast[i];
    }
    const CombinationWeight weight = optimal_alpha(e1, e2);
    alpha = weight.alpha;
    source = weight.degenerate ? "degenerate" : "estimated";
  }
  const std::vector<double> combined = combine(first.forecast, second.forecast, alpha);

  std::string csv = "timestamp,actual,forecast\n";
  for (std::size_t i = 0; i < combined.size(); ++i) {
    csv += std::to_string(first.timestamps[i]);
    csv += ',';
    csv += format_double(first.actual[i]);
    csv += ',';
    csv += format_double(combined[i]);
    csv += '\n';
  }
  write_file_atomic(args.out, csv);
  std::cout << "alpha=" << format_double(alpha) << " source=" << source << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"one-step traffic speed forecasting: models, backtests, benchmarks"};
  app.require_subcommand(1);

  IngestArgs ingest_args;
  CLI::App* ingest = app.add_subcommand("ingest", "convert raw detector/probe files to series CSV");
  ingest->add_option("--loop", ingest_args.loop_specs,
                     "loop-detector spec JSON; repeat to chain files");
  ingest->add_option("--probe", ingest_args.probe_specs,
                     "probe-segment spec JSON; repeat to chain files");
  ingest->add_flag("--keep-missing", ingest_args.keep_missing,
                   "keep unreadable rows as NA instead of interpolating");
  ingest->add_option("--flat-noise", ingest_args.flat_noise_sd,
                     "dither exactly repeated speeds with N(0, sd^2)");
  ingest->add_option("--flat-noise-seed", ingest_args.flat_noise_seed, "dither seed");
  ingest->add_option("--agg", ingest_args.agg_minutes, "aggregation level in minutes");
  ingest->add_option("--out", ingest_args.out, "output series CSV")->required();
  ingest->callback([&] { run_ingest(ingest_args); });

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic day from a profile");
  synth->add_option("--profile", synth_args.profile, "profile JSON")->required();
  std::uint64_t synth_seed = 0;
  CLI::Option* synth_seed_opt = synth->add_option("--seed", synth_seed, "override profile seed");
  synth->add_option("--agg", synth_args.agg_minutes, "aggregation level in minutes");
  synth->add_option("--out", synth_args.out, "output series CSV")->required();
  synth->callback([&] {
    if (synth_seed_opt->count() > 0) synth_args.seed = synth_seed;
    run_synth(synth_args);
  });

  FitArgs fit_args;
  CLI::App* fit = app.add_subcommand("fit", "fit one model and write its parameters as JSON");
  add_model_options(fit, fit_args.model);
  fit->add_option("--input", fit_args.input, "training series CSV")->required();
  fit->add_option("--agg", fit_args.agg_minutes, "aggregation level in minutes");
  fit->add_option("--out", fit_args.out, "output parameter JSON")->required();
  fit->callback([&] { run_fit(fit_args); });

  EvalArgs forecast_args;
  CLI::App* forecast =
      app.add_subcommand("forecast", "one-step forecasts with aligned actual/forecast columns");
  add_model_options(forecast, forecast_args.model);
  forecast->add_option("--input", forecast_args.input, "test series CSV")->required();
  forecast->add_option("--train", forecast_args.train, "training series CSV (fitted models)");
  forecast->add_option("--agg", forecast_args.agg_minutes, "aggregation level in minutes");
  std::size_t forecast_warmup = 0;
  CLI::Option* forecast_warmup_opt =
      forecast->add_option("--warmup", forecast_warmup, "first forecast origin index");
  forecast->add_option("--out", forecast_args.out, "output forecast CSV")->required();
  forecast->callback([&] {
    if (forecast_warmup_opt->count() > 0) forecast_args.warmup = forecast_warmup;
    run_forecast(forecast_args);
  });

  EvalArgs backtest_args;
  CLI::App* backtest =
      app.add_subcommand("backtest", "one-step backtest of a single model, metrics as JSON");
  add_model_options(backtest, backtest_args.model);
  backtest->add_option("--input", backtest_args.input, "test series CSV")->required();
  backtest->add_option("--train", backtest_args.train, "training series CSV (fitted models)");
  backtest->add_option("--agg", backtest_args.agg_minutes, "aggregation level in minutes");
  std::size_t backtest_warmup = 0;
  CLI::Option* backtest_warmup_opt =
      backtest->add_option("--warmup", backtest_warmup, "first forecast origin index");
  backtest->add_option("--out", backtest_args.out, "output metrics JSON")->required();
  backtest->add_option("--timings-out", backtest_args.timings_out,
                       "also write wall-clock timings (not byte-reproducible)");
  backtest->callback([&] {
    if (backtest_warmup_opt->count() > 0) backtest_args.warmup = backtest_warmup;
    run_backtest(backtest_args);
  });

  BenchmarkArgs benchmark_args;
  CLI::App* benchmark =
      app.add_subcommand("benchmark", "run an experiment plan: reports, timings, charts");
  benchmark->add_option("--plan", benchmark_args.plan, "plan JSON")->required();
  benchmark->add_option("--data-dir", benchmark_args.data_dir,
                        "directory with <series_id>.csv files for ids the plan does not define");
  benchmark->add_option("--out", benchmark_args.out_dir, "output directory")->required();
  benchmark->callback([&] { run_benchmark(benchmark_args); });

  CombineArgs combine_args;
  CLI::App* combine_cmd =
      app.add_subcommand("combine", "convex combination of two forecast CSVs");
  combine_cmd->add_option("--first", combine_args.first, "first forecast CSV")->required();
  combine_cmd->add_option("--second", combine_args.second, "second forecast CSV")->required();
  combine_cmd->add_option("--alpha", combine_args.alpha, "fixed weight on the first forecast");
  combine_cmd->add_flag("--estimate", combine_args.estimate,
                        "estimate the weight from the files' own errors");
  combine_cmd->add_option("--out", combine_args.out, "output forecast CSV")->required();
  combine_cmd->callback([&] { run_combine(combine_args); });

  ReportArgs report_args;
  CLI::App* report =
      app.add_subcommand("report", "re-render report.csv and charts from a report JSON");
  report->add_option("--input", report_args.input, "report JSON")->required();
  report->add_option("--out", report_args.out_dir, "output directory")->required();
  report->callback([&] { run_report(report_args); });

  try {
    app.parse(argc, argv);
    return kExitOk;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfigError;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfigError;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return kExitConfigError;
  } catch (const data_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const config_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumericalError;
  }
}

}  // namespace trafficfc

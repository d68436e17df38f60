#include "trafficfc/series.hpp"

#include <algorithm>
#include <cmath>

#include "trafficfc/errors.hpp"
#include "trafficfc/rng.hpp"

namespace trafficfc {

const char* variable_name(Variable v) {
  switch (v) {
    case Variable::speed: return "speed";
    case Variable::flow: return "flow";
    case Variable::occupancy: return "occupancy";
    case Variable::travel_time: return "travel_time";
  }
  return "?";
}

Variable variable_from_name(const std::string& name) {
  for (Variable v : {Variable::speed, Variable::flow, Variable::occupancy, Variable::travel_time})
    if (name == variable_name(v)) return v;
  throw config_error("unknown variable: " + name);
}

double ObservationRecord::value(Variable v) const {
  switch (v) {
    case Variable::speed: return speed;
    case Variable::flow: return flow;
    case Variable::occupancy: return occupancy;
    case Variable::travel_time: return travel_time;
  }
  return kNaN;
}

void ObservationRecord::set_value(Variable v, double x) {
  switch (v) {
    case Variable::speed: speed = x; break;
    case Variable::flow: flow = x; break;
    case Variable::occupancy: occupancy = x; break;
    case Variable::travel_time: travel_time = x; break;
  }
}

std::vector<double> ObservationSeries::values(Variable v) const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.value(v));
  return out;
}

void ObservationSeries::validate() const {
  if (base_interval <= 0) throw data_error("series " + series_id + ": base interval must be positive");
  if (variables_present.empty()) throw data_error("series " + series_id + ": no variables present");
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].timestamp != records[i - 1].timestamp + base_interval)
      throw data_error("series " + series_id + ": timestamps not evenly spaced at record " +
                       std::to_string(i));
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    for (Variable v : variables_present) {
      const double x = r.value(v);
      if (std::isnan(x)) {
        if (!r.missing)
          throw data_error("series " + series_id + ": NaN value not flagged missing at record " +
                           std::to_string(i));
        continue;
      }
      if (x < 0.0)
        throw data_error("series " + series_id + ": negative " + variable_name(v) +
                         " at record " + std::to_string(i));
      if (v == Variable::occupancy && x > 100.0)
        throw data_error("series " + series_id + ": occupancy above 100% at record " +
                         std::to_string(i));
    }
  }
}

AggregationLevel AggregationLevel::of(int minutes) {
  for (int m : kSupportedLevels)
    if (m == minutes) return AggregationLevel{minutes};
  throw config_error("unsupported aggregation level: " + std::to_string(minutes) + " minutes");
}

ObservationSeries aggregate(const ObservationSeries& series, AggregationLevel level) {
  AggregationLevel::of(level.minutes);  // membership check for hand-built structs
  if (series.base_interval <= 0) throw data_error("aggregate: series has no base interval");
  if (level.seconds() % series.base_interval != 0)
    throw config_error("aggregation level " + std::to_string(level.minutes) +
                       " min is not a multiple of the " + std::to_string(series.base_interval) +
                       " s base interval");
  const std::size_t m = static_cast<std::size_t>(level.seconds() / series.base_interval);
  for (std::size_t i = 0; i < series.records.size(); ++i) {
    const auto& r = series.records[i];
    bool bad = r.missing;
    for (Variable v : series.variables_present) bad = bad || std::isnan(r.value(v));
    if (bad)
      throw data_error("aggregate: record " + std::to_string(i) +
                       " is missing; interpolate before aggregating");
  }

  ObservationSeries out;
  out.base_interval = level.seconds();
  out.variables_present = series.variables_present;
  out.series_id = series.series_id;
  const std::size_t blocks = series.records.size() / m;  // trailing partial block dropped
  out.records.reserve(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    ObservationRecord rec;
    rec.timestamp = series.records[b * m].timestamp;
    for (Variable v : series.variables_present) {
      double sum = 0.0;
      for (std::size_t i = 0; i < m; ++i) sum += series.records[b * m + i].value(v);
      rec.set_value(v, sum / static_cast<double>(m));
    }
    out.records.push_back(rec);
  }
  return out;
}

ObservationSeries interpolate_missing(const ObservationSeries& series) {
  ObservationSeries out = series;
  const std::size_t n = out.records.size();
  if (n == 0) return out;

  for (Variable v : out.variables_present) {
    std::vector<double> col = out.values(v);
    std::vector<std::size_t> valid;
    for (std::size_t i = 0; i < n; ++i)
      if (!std::isnan(col[i])) valid.push_back(i);
    if (valid.empty())
      throw data_error("series " + out.series_id + ": variable " + variable_name(v) +
                       " has no valid values to interpolate from");
    // Boundary gaps extend the nearest valid value outward.
    for (std::size_t i = 0; i < valid.front(); ++i) col[i] = col[valid.front()];
    for (std::size_t i = valid.back() + 1; i < n; ++i) col[i] = col[valid.back()];
    // Interior gaps are linear between the bracketing valid values.
    for (std::size_t k = 1; k < valid.size(); ++k) {
      const std::size_t lo = valid[k - 1], hi = valid[k];
      for (std::size_t i = lo + 1; i < hi; ++i) {
        const double frac = static_cast<double>(i - lo) / static_cast<double>(hi - lo);
        col[i] = col[lo] + frac * (col[hi] - col[lo]);
      }
    }
    for (std::size_t i = 0; i < n; ++i) out.records[i].set_value(v, col[i]);
  }
  for (auto& r : out.records) r.missing = false;
  return out;
}

ObservationSeries inject_flat_line_noise(const ObservationSeries& series, Variable variable,
                                         double sigma, std::uint64_t seed) {
  if (sigma <= 0.0) throw config_error("inject_flat_line_noise: sigma must be positive");
  if (!series.has(variable))
    throw config_error(std::string("inject_flat_line_noise: series lacks ") +
                       variable_name(variable));
  ObservationSeries out = series;
  NormalSampler rng(seed);
  // Repeats are judged against the input, so a whole flat run gets dithered.
  for (std::size_t i = 1; i < series.records.size(); ++i) {
    const double prev = series.records[i - 1].value(variable);
    const double cur = series.records[i].value(variable);
    if (std::isnan(prev) || std::isnan(cur) || cur != prev) continue;
    out.records[i].set_value(variable, std::max(0.0, cur + rng.next(0.0, sigma)));
  }
  return out;
}

LagDesign lag_embed(const ObservationSeries& series, int lag_count,
                    const std::set<Variable>& exogenous, Variable target) {
  if (lag_count < 1) throw config_error("lag_embed: lag_count must be at least 1");
  if (!series.has(target))
    throw config_error(std::string("lag_embed: series lacks target variable ") +
                       variable_name(target));
  for (Variable v : exogenous) {
    if (v != Variable::flow && v != Variable::occupancy)
      throw config_error(std::string("lag_embed: unsupported exogenous variable ") +
                         variable_name(v));
    if (!series.has(v))
      throw config_error(std::string("lag_embed: series lacks exogenous variable ") +
                         variable_name(v));
  }
  const std::size_t n = series.size();
  if (n < static_cast<std::size_t>(lag_count) + 1)
    throw data_error("lag_embed: need more than lag_count observations");

  std::vector<Variable> exog(exogenous.begin(), exogenous.end());  // set order: flow, occupancy
  const std::size_t rows = n - static_cast<std::size_t>(lag_count);
  const std::size_t cols = static_cast<std::size_t>(lag_count) + exog.size();

  LagDesign design;
  design.lag_count = lag_count;
  design.exogenous = exog;
  design.target_variable = target;
  design.inputs.resize(rows, cols);
  design.targets.resize(rows);

  const std::vector<double> tv = series.values(target);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t t = r + static_cast<std::size_t>(lag_count) - 1;
    std::size_t c = 0;
    design.inputs(r, c++) = tv[t];
    for (Variable v : exog) design.inputs(r, c++) = series.records[t].value(v);
    for (int l = 1; l < lag_count; ++l) design.inputs(r, c++) = tv[t - static_cast<std::size_t>(l)];
    design.targets(r) = tv[t + 1];
  }
  for (Eigen::Index i = 0; i < design.inputs.size(); ++i)
    if (std::isnan(design.inputs.data()[i]))
      throw data_error("lag_embed: design contains missing values; interpolate first");
  for (Eigen::Index i = 0; i < design.targets.size(); ++i)
    if (std::isnan(design.targets(i)))
      throw data_error("lag_embed: targets contain missing values; interpolate first");
  return design;
}

}  // namespace trafficfc

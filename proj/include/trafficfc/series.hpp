#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <vector>

namespace trafficfc {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Measured quantities a record can carry. Speed is always present; the
/// others depend on the sensor type (loop detectors report flow and
/// occupancy, probe feeds report travel time).
enum class Variable { speed, flow, occupancy, travel_time };

const char* variable_name(Variable v);
Variable variable_from_name(const std::string& name);  // throws config_error

/// One fixed-interval observation. Values for absent variables are NaN.
struct ObservationRecord {
  std::int64_t timestamp = 0;  // seconds since epoch (or series start)
  double speed = kNaN;         // miles per hour
  double flow = kNaN;          // vehicles per interval
  double occupancy = kNaN;     // percent of interval the detector was occupied
  double travel_time = kNaN;   // minutes
  bool missing = false;        // at least one present variable was unreadable

  double value(Variable v) const;
  void set_value(Variable v, double x);
};

/// An evenly spaced single-location series. `variables_present` lists which
/// record fields are meaningful; absent fields stay NaN in every record.
struct ObservationSeries {
  std::vector<ObservationRecord> records;
  std::int64_t base_interval = 0;  // seconds between consecutive records
  std::set<Variable> variables_present;
  std::string series_id;

  std::size_t size() const { return records.size(); }
  bool has(Variable v) const { return variables_present.count(v) > 0; }

  /// Column view of one variable.
  std::vector<double> values(Variable v) const;

  /// Structural invariants: positive interval, exactly spaced increasing
  /// timestamps, values in physical range, NaN only where flagged missing.
  /// Throws data_error on violation.
  void validate() const;
};

/// Aggregation period in minutes; the supported set matches common detector
/// archive granularities.
struct AggregationLevel {
  int minutes = 1;

  static AggregationLevel of(int minutes);  // throws config_error if unsupported
  std::int64_t seconds() const { return static_cast<std::int64_t>(minutes) * 60; }
};

inline constexpr int kSupportedLevels[] = {1, 5, 10, 15, 30, 45, 60};

/// Regression view of a series: each row pairs the current observation (and
/// optional exogenous variables) with the next-step speed target.
struct LagDesign {
  Eigen::MatrixXd inputs;   // n x d, column layout documented at lag_embed
  Eigen::VectorXd targets;  // n
  int lag_count = 1;
  std::vector<Variable> exogenous;  // in column order
  Variable target_variable = Variable::speed;
};

/// Mean-aggregate consecutive blocks of records. Every present variable is
/// averaged arithmetically; a trailing block shorter than the level is
/// dropped. The block's timestamp is the timestamp of its first record.
/// Requires a cleaned series (no missing records) and a level that is an
/// exact multiple of the base interval.
ObservationSeries aggregate(const ObservationSeries& series, AggregationLevel level);

/// Fill unreadable values by linear interpolation between the nearest valid
/// neighbours, independently per variable. Gaps at either boundary extend
/// the nearest valid value. The result has no missing records, and applying
/// the operation again is an identity.
ObservationSeries interpolate_missing(const ObservationSeries& series);

/// Add seeded N(0, sigma^2) perturbations to positions whose value exactly
/// repeats the previous one, simulating sensor dithering on flat-lined
/// stretches. Perturbed values are clamped at zero. Only `variable` is
/// touched; draws are consumed in index order so output is seed-stable.
ObservationSeries inject_flat_line_noise(const ObservationSeries& series, Variable variable,
                                         double sigma, std::uint64_t seed);

/// Build the one-step regression design. Row t (for t = lag_count-1 ..
/// size-2) is [target_t, exog..., target_{t-1}, ..., target_{t-lag_count+1}]
/// with target value at t+1 as the response; exogenous columns (flow and/or
/// occupancy, in that order) are taken at time t only. Targets default to
/// speed. No future information enters any row.
LagDesign lag_embed(const ObservationSeries& series, int lag_count,
                    const std::set<Variable>& exogenous,
                    Variable target = Variable::speed);

}  // namespace trafficfc

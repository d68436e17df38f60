#include "trafficfc/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "trafficfc/csv.hpp"
#include "trafficfc/errors.hpp"
#include "trafficfc/rng.hpp"

namespace trafficfc {

namespace {

int require_column(const CsvTable& table, const std::string& name, const std::string& path) {
  const int idx = table.column(name);
  if (idx < 0) throw data_error(path + ": missing column '" + name + "'");
  return idx;
}

bool cell_is_na(const std::string& cell) {
  std::string t;
  for (char c : cell)
    if (c != ' ' && c != '\t') t.push_back(c);
  return t.empty() || t == "NA";
}

/// NaN for empty/NA cells; data_error (with 1-based line) for anything else
/// that does not parse as a number.
double parse_value_cell(const std::string& cell, const std::string& path, std::size_t line) {
  if (cell_is_na(cell)) return kNaN;
  double v = 0.0;
  if (!parse_double_cell(cell, v))
    throw data_error(path + ":" + std::to_string(line) + ": unreadable value '" + cell + "'");
  return v;
}

std::string stem_of(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

}  // namespace

ObservationSeries load_loop_csv(const LoopFileSpec& spec) {
  if (spec.lanes.empty()) throw config_error("loop file spec: at least one lane required");
  if (spec.interval <= 0) throw config_error("loop file spec: interval must be positive");
  const CsvTable table = read_csv(spec.path);
  const int ts_col = require_column(table, spec.timestamp_column, spec.path);

  const bool has_flow = std::any_of(spec.lanes.begin(), spec.lanes.end(),
                                    [](const LoopLaneColumns& l) { return !l.flow.empty(); });
  const bool has_occ = std::any_of(spec.lanes.begin(), spec.lanes.end(),
                                   [](const LoopLaneColumns& l) { return !l.occupancy.empty(); });

  struct LaneIdx {
    int speed = -1, flow = -1, occ = -1;
  };
  std::vector<LaneIdx> lanes;
  for (const auto& l : spec.lanes) {
    LaneIdx idx;
    idx.speed = require_column(table, l.speed, spec.path);
    if (!l.flow.empty()) idx.flow = require_column(table, l.flow, spec.path);
    if (!l.occupancy.empty()) idx.occ = require_column(table, l.occupancy, spec.path);
    lanes.push_back(idx);
  }

  ObservationSeries series;
  series.base_interval = spec.interval;
  series.series_id = spec.series_id.empty() ? stem_of(spec.path) : spec.series_id;
  series.variables_present = {Variable::speed};
  if (has_flow) series.variables_present.insert(Variable::flow);
  if (has_occ) series.variables_present.insert(Variable::occupancy);

  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::size_t line = i + 2;
    const std::string& ts_cell = row[static_cast<std::size_t>(ts_col)];
    std::int64_t ts = 0;
    auto res = std::from_chars(ts_cell.data(), ts_cell.data() + ts_cell.size(), ts);
    if (res.ec != std::errc() || res.ptr != ts_cell.data() + ts_cell.size())
      throw data_error(spec.path + ":" + std::to_string(line) + ": bad timestamp '" + ts_cell + "'");

    ObservationRecord rec;
    rec.timestamp = ts;
    auto lane_mean = [&](auto col_of) -> double {
      double sum = 0.0;
      int count = 0;
      for (const auto& lane : lanes) {
        const int c = col_of(lane);
        if (c < 0) continue;
        const double v = parse_value_cell(row[static_cast<std::size_t>(c)], spec.path, line);
        if (std::isnan(v)) continue;
        sum += v;
        ++count;
      }
      return count > 0 ? sum / count : kNaN;
    };
    rec.speed = lane_mean([](const LaneIdx& l) { return l.speed; });
    if (has_flow) rec.flow = lane_mean([](const LaneIdx& l) { return l.flow; });
    if (has_occ) rec.occupancy = lane_mean([](const LaneIdx& l) { return l.occ; });
    for (Variable v : series.variables_present) rec.missing = rec.missing || std::isnan(rec.value(v));
    series.records.push_back(rec);
  }
  series.validate();
  return series;
}

ObservationSeries load_probe_csv(const ProbeFileSpec& spec) {
  if (spec.interval <= 0) throw config_error("probe file spec: interval must be positive");
  const CsvTable table = read_csv(spec.path);
  const int sp_col = require_column(table, spec.speed_column, spec.path);
  const int tt_col = spec.travel_time_column.empty()
                         ? -1
                         : require_column(table, spec.travel_time_column, spec.path);

  ObservationSeries series;
  series.base_interval = spec.interval;
  series.series_id = spec.segment_id.empty() ? stem_of(spec.path) : spec.segment_id;
  series.variables_present = {Variable::speed};
  if (tt_col >= 0) series.variables_present.insert(Variable::travel_time);

  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const std::size_t line = i + 2;
    ObservationRecord rec;
    // Probe feeds carry no clock column; rows are at a fixed cadence.
    rec.timestamp = static_cast<std::int64_t>(i) * spec.interval;
    rec.speed = parse_value_cell(table.rows[i][static_cast<std::size_t>(sp_col)], spec.path, line);
    if (tt_col >= 0)
      rec.travel_time =
          parse_value_cell(table.rows[i][static_cast<std::size_t>(tt_col)], spec.path, line);
    for (Variable v : series.variables_present) rec.missing = rec.missing || std::isnan(rec.value(v));
    series.records.push_back(rec);
  }
  series.validate();
  return series;
}

ObservationSeries load_series_csv(const std::string& path, const std::string& series_id) {
  const CsvTable table = read_csv(path);
  const int ts_col = require_column(table, "timestamp", path);
  std::vector<std::pair<Variable, int>> var_cols;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (static_cast<int>(j) == ts_col) continue;
    var_cols.emplace_back(variable_from_name(table.header[j]), static_cast<int>(j));
  }
  if (var_cols.empty()) throw data_error(path + ": no variable columns");
  if (table.rows.size() < 2) throw data_error(path + ": need at least two records");

  ObservationSeries series;
  series.series_id = series_id.empty() ? stem_of(path) : series_id;
  for (const auto& [v, j] : var_cols) series.variables_present.insert(v);

  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const std::size_t line = i + 2;
    const std::string& ts_cell = table.rows[i][static_cast<std::size_t>(ts_col)];
    ObservationRecord rec;
    auto res = std::from_chars(ts_cell.data(), ts_cell.data() + ts_cell.size(), rec.timestamp);
    if (res.ec != std::errc() || res.ptr != ts_cell.data() + ts_cell.size())
      throw data_error(path + ":" + std::to_string(line) + ": bad timestamp '" + ts_cell + "'");
    for (const auto& [v, j] : var_cols)
      rec.set_value(v, parse_value_cell(table.rows[i][static_cast<std::size_t>(j)], path, line));
    for (Variable v : series.variables_present) rec.missing = rec.missing || std::isnan(rec.value(v));
    series.records.push_back(rec);
  }
  series.base_interval = series.records[1].timestamp - series.records[0].timestamp;
  series.validate();
  return series;
}

std::string series_to_csv(const ObservationSeries& series) {
  std::string out = "timestamp";
  for (Variable v : series.variables_present) {
    out += ',';
    out += variable_name(v);
  }
  out += '\n';
  for (const auto& r : series.records) {
    out += std::to_string(r.timestamp);
    for (Variable v : series.variables_present) {
      out += ',';
      const double x = r.value(v);
      out += std::isnan(x) ? "NA" : format_double(x);
    }
    out += '\n';
  }
  return out;
}

void write_series_csv(const ObservationSeries& series, const std::string& path) {
  write_file_atomic(path, series_to_csv(series));
}

ObservationSeries concat_chains(const ObservationSeries& first, const ObservationSeries& second) {
  if (first.records.empty()) return second;
  if (second.records.empty()) return first;
  if (first.base_interval != second.base_interval)
    throw config_error("concat_chains: base intervals differ");
  if (first.variables_present != second.variables_present)
    throw config_error("concat_chains: variable sets differ");

  ObservationSeries out = first;
  std::int64_t ts = first.records.back().timestamp;
  for (ObservationRecord rec : second.records) {
    ts += first.base_interval;
    rec.timestamp = ts;
    out.records.push_back(rec);
  }
  return out;
}

void SynthProfile::validate() const {
  if (day_length < 1) throw config_error("synthetic profile: day_length must be at least 1");
  if (interval < 1) throw config_error("synthetic profile: interval must be at least 1 second");
  if (free_flow_speed <= 0.0) throw config_error("synthetic profile: free_flow_speed must be positive");
  if (noise_sd < 0.0) throw config_error("synthetic profile: noise_sd must be non-negative");
  auto sorted = incident_windows;
  std::sort(sorted.begin(), sorted.end(),
            [](const IncidentWindow& a, const IncidentWindow& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& w = sorted[i];
    if (w.start >= w.end || w.end > day_length)
      throw config_error("synthetic profile: incident window out of range");
    if (w.speed_drop < 0.0 || w.speed_drop >= free_flow_speed)
      throw config_error("synthetic profile: incident speed_drop must be in [0, free_flow_speed)");
    if (i > 0 && sorted[i - 1].end > w.start)
      throw config_error("synthetic profile: incident windows overlap");
  }
}

ObservationSeries generate_synthetic(const SynthProfile& profile) {
  profile.validate();
  ObservationSeries series;
  series.base_interval = profile.interval;
  series.series_id = profile.series_id;
  series.variables_present = {Variable::speed, Variable::flow, Variable::occupancy};

  NormalSampler rng(profile.seed);
  const double n = static_cast<double>(profile.day_length);
  const double mid = (n - 1.0) / 2.0;
  const double dip_width = kDipWidthFraction * n;
  const double model_free_flow = kModelFreeFlowFactor * profile.free_flow_speed;

  for (std::size_t t = 0; t < profile.day_length; ++t) {
    const double td = static_cast<double>(t);

    // Midday dip: a cos^2 bump centred on the day, zero outside its support.
    double dip = 0.0;
    if (std::abs(td - mid) <= dip_width / 2.0) {
      const double c = std::cos(std::numbers::pi * (td - mid) / dip_width);
      dip = kDipAmplitudeMph * c * c;
    }

    // Incident drops ramp linearly over kIncidentRampIntervals at each edge.
    double drop = 0.0;
    for (const auto& w : profile.incident_windows) {
      if (t < w.start || t >= w.end) continue;
      const double up = static_cast<double>(t - w.start + 1) / kIncidentRampIntervals;
      const double down = static_cast<double>(w.end - t) / kIncidentRampIntervals;
      drop = w.speed_drop * std::min({1.0, up, down});
    }

    const double latent = std::max(0.0, profile.free_flow_speed - dip - drop);
    // Linear speed-density coupling: slower latent speed means denser traffic.
    const double density_frac = std::clamp(1.0 - latent / model_free_flow, 0.0, 1.0);
    const double occ_clean = 100.0 * density_frac;
    const double flow_clean = latent * kJamDensityVehPerMile * density_frac *
                              static_cast<double>(profile.interval) / 3600.0;

    ObservationRecord rec;
    rec.timestamp = static_cast<std::int64_t>(t) * profile.interval;
    if (profile.noise_sd > 0.0) {
      // One draw per variable per step, in a fixed order, keeps output
      // identical for identical seeds regardless of future profile options.
      const double zs = rng.next();
      const double zf = rng.next();
      const double zo = rng.next();
      rec.speed = std::max(0.0, latent + profile.noise_sd * zs);
      rec.flow = std::max(0.0, flow_clean + kFlowNoiseFactor * profile.noise_sd * zf);
      rec.occupancy = std::clamp(occ_clean + kOccupancyNoiseFactor * profile.noise_sd * zo, 0.0, 100.0);
    } else {
      rec.speed = latent;
      rec.flow = flow_clean;
      rec.occupancy = occ_clean;
    }
    series.records.push_back(rec);
  }
  return series;
}

namespace {

[[noreturn]] void bad_json(const std::string& what, const nlohmann::json::exception& e) {
  throw config_error(what + ": " + e.what());
}

}  // namespace

SynthProfile synth_profile_from_json(const nlohmann::json& j) {
  SynthProfile p;
  try {
    p.day_length = j.at("day_length").get<std::size_t>();
    p.free_flow_speed = j.at("free_flow_speed").get<double>();
    p.interval = j.value("interval_seconds", std::int64_t{20});
    p.noise_sd = j.value("noise_sd", 0.0);
    p.seed = j.value("seed", std::uint64_t{0});
    p.series_id = j.value("series_id", std::string("synthetic"));
    if (j.contains("incident_windows")) {
      for (const auto& w : j.at("incident_windows")) {
        IncidentWindow iw;
        iw.start = w.at("start").get<std::size_t>();
        iw.end = w.at("end").get<std::size_t>();
        iw.speed_drop = w.at("speed_drop").get<double>();
        p.incident_windows.push_back(iw);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    bad_json("synthetic profile", e);
  }
  p.validate();
  return p;
}

LoopFileSpec loop_spec_from_json(const nlohmann::json& j) {
  LoopFileSpec s;
  try {
    s.path = j.at("path").get<std::string>();
    s.timestamp_column = j.at("timestamp_column").get<std::string>();
    s.interval = j.at("interval_seconds").get<std::int64_t>();
    s.series_id = j.value("series_id", std::string());
    for (const auto& l : j.at("lanes")) {
      LoopLaneColumns lane;
      lane.speed = l.at("speed").get<std::string>();
      lane.flow = l.value("flow", std::string());
      lane.occupancy = l.value("occupancy", std::string());
      s.lanes.push_back(lane);
    }
  } catch (const nlohmann::json::exception& e) {
    bad_json("loop file spec", e);
  }
  return s;
}

ProbeFileSpec probe_spec_from_json(const nlohmann::json& j) {
  ProbeFileSpec s;
  try {
    s.path = j.at("path").get<std::string>();
    s.speed_column = j.at("speed_column").get<std::string>();
    s.travel_time_column = j.value("travel_time_column", std::string());
    s.segment_id = j.value("segment_id", std::string());
    s.interval = j.at("interval_seconds").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    bad_json("probe file spec", e);
  }
  return s;
}

}  // namespace trafficfc

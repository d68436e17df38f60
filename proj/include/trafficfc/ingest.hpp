#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "trafficfc/series.hpp"

namespace trafficfc {

/// Column mapping for one lane of a loop-detector CSV. Empty flow/occupancy
/// names mean the lane does not report that variable.
struct LoopLaneColumns {
  std::string speed;
  std::string flow;
  std::string occupancy;
};

/// Loop-detector archive file: one row per interval, several lanes side by
/// side. Lanes are averaged into a single station series.
struct LoopFileSpec {
  std::string path;
  std::string timestamp_column;
  std::int64_t interval = 0;  // seconds
  std::vector<LoopLaneColumns> lanes;
  std::string series_id;
};

/// Probe-vehicle segment file: rows at a fixed cadence, no timestamp column;
/// times are synthesized as row_index * interval.
struct ProbeFileSpec {
  std::string path;
  std::string speed_column;
  std::string travel_time_column;  // empty if the feed has no travel time
  std::string segment_id;
  std::int64_t interval = 0;  // seconds
};

/// One incident on a synthetic day: a speed drop over [start, end) record
/// indices, ramped linearly over kIncidentRampIntervals at each edge.
struct IncidentWindow {
  std::size_t start = 0;
  std::size_t end = 0;
  double speed_drop = 0.0;  // mph at the plateau
};

/// Recipe for a synthetic freeway day with coupled speed/flow/occupancy.
struct SynthProfile {
  std::size_t day_length = 0;      // number of records
  std::int64_t interval = 20;      // seconds per record
  double free_flow_speed = 60.0;   // mph
  std::vector<IncidentWindow> incident_windows;
  double noise_sd = 0.0;           // observation noise on speed, mph
  std::uint64_t seed = 0;
  std::string series_id = "synthetic";

  void validate() const;  // throws config_error
};

// Synthetic-day shape constants. The latent day is free_flow_speed minus a
// smooth midday dip and any incident drops; flow and occupancy follow from
// speed through a linear speed-density (Greenshields) relation.
inline constexpr double kDipAmplitudeMph = 8.0;
inline constexpr double kDipWidthFraction = 0.5;  // dip spans the middle half of the day
inline constexpr int kIncidentRampIntervals = 5;
inline constexpr double kModelFreeFlowFactor = 1.05;   // model free-flow = factor * profile's
inline constexpr double kJamDensityVehPerMile = 120.0;
inline constexpr double kOccupancyNoiseFactor = 0.4;   // occupancy noise sd, % per mph of noise_sd
inline constexpr double kFlowNoiseFactor = 0.2;        // flow noise sd, veh per mph of noise_sd

/// Load and lane-average a loop archive. Cells that are empty or "NA" mark
/// the lane unreadable for that row; a row where every lane is unreadable
/// for some declared variable becomes a missing record. Structural problems
/// (wrong field count, bad timestamp, unknown column) raise data_error with
/// the offending line.
ObservationSeries load_loop_csv(const LoopFileSpec& spec);

/// Load a probe segment file. Repeated identical speeds are kept as-is;
/// unreadable cells become missing records.
ObservationSeries load_probe_csv(const ProbeFileSpec& spec);

/// Canonical series CSV: header `timestamp,<variables...>`, one row per
/// record, missing cells written as "NA". The writer/loader round-trip is
/// exact.
ObservationSeries load_series_csv(const std::string& path, const std::string& series_id = "");
std::string series_to_csv(const ObservationSeries& series);
void write_series_csv(const ObservationSeries& series, const std::string& path);

/// Join two same-interval collections recorded back to back (e.g. a morning
/// and an afternoon session) into one series with contiguous synthetic
/// timestamps continuing from the first part.
ObservationSeries concat_chains(const ObservationSeries& first, const ObservationSeries& second);

/// Generate one synthetic day. Speed, flow and occupancy share one latent
/// day curve, with independent observation noise per variable, so the
/// exogenous channels carry real information about the latent state.
ObservationSeries generate_synthetic(const SynthProfile& profile);

SynthProfile synth_profile_from_json(const nlohmann::json& j);
LoopFileSpec loop_spec_from_json(const nlohmann::json& j);
ProbeFileSpec probe_spec_from_json(const nlohmann::json& j);

}  // namespace trafficfc

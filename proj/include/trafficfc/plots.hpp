#pragma once

// Deterministic SVG rendering of backtest reports: one grouped RMSE bar
// chart per aggregation level, bars labelled with exactly the numeric
// strings the CSV report carries.

#include <string>
#include <vector>

#include "trafficfc/backtest.hpp"

namespace trafficfc {

// Render the chart for one aggregation level: one group of bars per test
// series, one colored bar per model. Cells absent at this level are omitted
// and listed in a legend note. The output depends only on the report's
// cells, so rendering the same report twice is byte-identical. Throws
// data_error if the report has no cells at the level.
std::string render_rmse_chart(const ExperimentReport& report, int level);

// Write rmse_<level>min.svg for every level present in the report into
// out_dir (created if needed, files written atomically). Returns the paths
// written, in level order. Throws data_error on an empty report.
std::vector<std::string> emit_plots(const ExperimentReport& report, const std::string& out_dir);

}  // namespace trafficfc

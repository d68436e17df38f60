#include "trafficfc/plots.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "trafficfc/csv.hpp"
#include "trafficfc/errors.hpp"

namespace trafficfc {

namespace {

// Chart geometry (pixels).
constexpr double kMarginLeft = 70.0;
constexpr double kMarginTop = 52.0;
constexpr double kMarginBottom = 64.0;
constexpr double kPlotHeight = 260.0;
constexpr double kBarWidth = 38.0;
constexpr double kBarGap = 6.0;
constexpr double kGroupGap = 34.0;
constexpr double kLegendWidth = 190.0;
constexpr int kYTicks = 5;

constexpr const char* kPalette[] = {
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948",
    "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac", "#86bcb6", "#d37295",
};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string px(double v) { return format_fixed(v, 2); }

// Smallest 1/2/5-decade step whose ceiling-multiple covers `top` in at most
// kYTicks intervals; keeps axis labels short and stable.
double nice_step(double top) {
  if (top <= 0.0) return 1.0 / kYTicks;
  const double raw = top / kYTicks;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double mult : {1.0, 2.0, 5.0, 10.0}) {
    if (mag * mult >= raw) return mag * mult;
  }
  return mag * 10.0;
}

// Trim a fixed-precision label: "2.50" -> "2.5", "3.00" -> "3".
std::string tick_label(double v) {
  std::string s = format_fixed(v, 3);
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s.empty() ? "0" : s;
}

void append_text(std::string& svg, double x, double y, const std::string& text,
                 const std::string& attrs) {
  svg += "<text x=\"" + px(x) + "\" y=\"" + px(y) + "\" " + attrs + ">" + xml_escape(text) +
         "</text>\n";
}

}  // namespace

std::string render_rmse_chart(const ExperimentReport& report, int level) {
  // Canonical axes: models and series sorted by name, as in the CSV rows.
  std::set<std::string> model_set, series_set;
  std::map<std::pair<std::string, std::string>, double> rmse_by_cell;
  for (const BacktestCell& c : report.cells) {
    if (c.level != level) continue;
    model_set.insert(c.model);
    series_set.insert(c.series_id);
    rmse_by_cell[{c.model, c.series_id}] = c.metrics.rmse;
  }
  if (model_set.empty())
    throw data_error("no cells at aggregation level " + std::to_string(level));
  const std::vector<std::string> models(model_set.begin(), model_set.end());
  const std::vector<std::string> series(series_set.begin(), series_set.end());

  double max_rmse = 0.0;
  std::vector<std::pair<std::string, std::string>> missing;  // model, series
  for (const std::string& s : series) {
    for (const std::string& m : models) {
      auto it = rmse_by_cell.find({m, s});
      if (it == rmse_by_cell.end())
        missing.emplace_back(m, s);
      else
        max_rmse = std::max(max_rmse, it->second);
    }
  }
  const double step = nice_step(max_rmse);
  const double y_top = step * kYTicks;

  const double group_width =
      static_cast<double>(models.size()) * kBarWidth +
      static_cast<double>(models.size() - 1) * kBarGap;
  const double plot_width = static_cast<double>(series.size()) * (group_width + kGroupGap);
  const double legend_x = kMarginLeft + plot_width + 24.0;
  const double width = legend_x + kLegendWidth;
  const double height = kMarginTop + kPlotHeight + kMarginBottom;
  const double base_y = kMarginTop + kPlotHeight;

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(width) + "\" height=\"" +
         px(height) + "\" viewBox=\"0 0 " + px(width) + " " + px(height) + "\">\n";
  svg += "<rect width=\"" + px(width) + "\" height=\"" + px(height) + "\" fill=\"white\"/>\n";
  append_text(svg, kMarginLeft, 24.0,
              std::to_string(level) + "-minute aggregation: one-step RMSE by model",
              "font-family=\"sans-serif\" font-size=\"15\" font-weight=\"bold\" fill=\"#333\"");

  // Horizontal grid and y tick labels.
  for (int i = 0; i <= kYTicks; ++i) {
    const double v = step * i;
    const double y = base_y - kPlotHeight * (v / y_top);
    svg += "<line x1=\"" + px(kMarginLeft) + "\" y1=\"" + px(y) + "\" x2=\"" +
           px(kMarginLeft + plot_width) + "\" y2=\"" + px(y) +
           "\" stroke=\"#ddd\" stroke-width=\"1\"/>\n";
    append_text(svg, kMarginLeft - 8.0, y + 4.0, tick_label(v),
                "font-family=\"sans-serif\" font-size=\"11\" fill=\"#555\" text-anchor=\"end\"");
  }
  append_text(svg, 18.0, kMarginTop + kPlotHeight / 2.0, "RMSE (mph)",
              "font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\" text-anchor=\"middle\" "
              "transform=\"rotate(-90 18 " +
                  px(kMarginTop + kPlotHeight / 2.0) + ")\"");

  // Bars, grouped by series. Value labels carry format_double(rmse), the
  // exact string the CSV report holds for the same cell.
  for (std::size_t si = 0; si < series.size(); ++si) {
    const double group_x =
        kMarginLeft + kGroupGap / 2.0 + static_cast<double>(si) * (group_width + kGroupGap);
    for (std::size_t mi = 0; mi < models.size(); ++mi) {
      auto it = rmse_by_cell.find({models[mi], series[si]});
      if (it == rmse_by_cell.end()) continue;
      const double x = group_x + static_cast<double>(mi) * (kBarWidth + kBarGap);
      const double h = y_top > 0.0 ? kPlotHeight * (it->second / y_top) : 0.0;
      svg += "<rect x=\"" + px(x) + "\" y=\"" + px(base_y - h) + "\" width=\"" + px(kBarWidth) +
             "\" height=\"" + px(h) + "\" fill=\"" +
             kPalette[mi % kPaletteSize] + "\"/>\n";
      append_text(svg, x + kBarWidth / 2.0, base_y - h - 5.0, format_double(it->second),
                  "font-family=\"sans-serif\" font-size=\"9\" fill=\"#333\" "
                  "text-anchor=\"middle\"");
    }
    append_text(svg, group_x + group_width / 2.0, base_y + 18.0, series[si],
                "font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\" "
                "text-anchor=\"middle\"");
  }
  svg += "<line x1=\"" + px(kMarginLeft) + "\" y1=\"" + px(base_y) + "\" x2=\"" +
         px(kMarginLeft + plot_width) + "\" y2=\"" + px(base_y) +
         "\" stroke=\"#333\" stroke-width=\"1\"/>\n";

  // Legend: model swatches, then a note for any omitted bars.
  double ly = kMarginTop + 4.0;
  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    svg += "<rect x=\"" + px(legend_x) + "\" y=\"" + px(ly) +
           "\" width=\"12\" height=\"12\" fill=\"" + kPalette[mi % kPaletteSize] + "\"/>\n";
    append_text(svg, legend_x + 18.0, ly + 10.0, models[mi],
                "font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\"");
    ly += 18.0;
  }
  if (!missing.empty()) {
    ly += 8.0;
    append_text(svg, legend_x, ly + 10.0, "not available:",
                "font-family=\"sans-serif\" font-size=\"10\" fill=\"#888\"");
    ly += 16.0;
    for (const auto& [m, s] : missing) {
      append_text(svg, legend_x, ly + 10.0, m + " on " + s,
                  "font-family=\"sans-serif\" font-size=\"10\" fill=\"#888\"");
      ly += 14.0;
    }
  }

  svg += "</svg>\n";
  return svg;
}

std::vector<std::string> emit_plots(const ExperimentReport& report, const std::string& out_dir) {
  if (report.cells.empty()) throw data_error("cannot plot an empty report");
  std::set<int> levels;
  for (const BacktestCell& c : report.cells) levels.insert(c.level);
  std::vector<std::string> paths;
  for (int level : levels) {
    const std::filesystem::path path =
        std::filesystem::path(out_dir) / ("rmse_" + std::to_string(level) + "min.svg");
    write_file_atomic(path.string(), render_rmse_chart(report, level));
    paths.push_back(path.string());
  }
  return paths;
}

}  // namespace trafficfc

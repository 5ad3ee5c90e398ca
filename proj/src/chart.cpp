#include "gqh/chart.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace gqh {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 200.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::optional<double> metric_value(const RunRecord& r, ChartMetric m) {
  switch (m) {
    case ChartMetric::Loss: return r.loss;
    case ChartMetric::W1Oracle: return r.w1_oracle;
    case ChartMetric::Risk: return r.risk;
    case ChartMetric::B: return r.b;
  }
  return std::nullopt;
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string tick_label(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Series {
  std::string arm;
  std::map<std::size_t, std::pair<double, std::size_t>> sums;  // epoch -> (sum, count)
};

}  // namespace

std::optional<ChartMetric> parse_chart_metric(std::string_view name) {
  if (name == "loss") return ChartMetric::Loss;
  if (name == "w1_oracle") return ChartMetric::W1Oracle;
  if (name == "risk") return ChartMetric::Risk;
  if (name == "b") return ChartMetric::B;
  return std::nullopt;
}

std::string_view to_string(ChartMetric m) {
  switch (m) {
    case ChartMetric::Loss: return "loss";
    case ChartMetric::W1Oracle: return "w1_oracle";
    case ChartMetric::Risk: return "risk";
    case ChartMetric::B: return "b";
  }
  return "?";
}

std::string render_chart_svg(const std::vector<RunRecord>& records, ChartMetric metric) {
  std::vector<Series> series;
  for (const auto& r : records) {
    const auto v = metric_value(r, metric);
    if (!v) continue;
    auto it = std::find_if(series.begin(), series.end(), [&](const Series& s) { return s.arm == r.arm; });
    if (it == series.end()) {
      series.push_back({r.arm, {}});
      it = std::prev(series.end());
    }
    auto& cell = it->sums[r.epoch];
    cell.first += *v;
    cell.second += 1;
  }
  if (series.empty()) {
    throw std::invalid_argument("emit_chart: no records carry metric '" + std::string(to_string(metric)) + "'");
  }

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series) {
    for (const auto& [epoch, cell] : s.sums) {
      const double y = cell.first / static_cast<double>(cell.second);
      xmin = std::min(xmin, static_cast<double>(epoch));
      xmax = std::max(xmax, static_cast<double>(epoch));
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (xmax == xmin) {
    xmin -= 1.0;
    xmax += 1.0;
  }
  if (ymax == ymin) {
    const double pad = std::max(1e-9, std::fabs(ymin) * 0.1);
    ymin -= pad;
    ymax += pad;
  }
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * plot_w; };
  auto py = [&](double y) { return kTop + (ymax - y) / (ymax - ymin) * plot_h; };

  const std::string name(to_string(metric));
  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) + "\" fill=\"white\"/>\n";
  svg += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" +
         escape(name) + " by epoch (seed mean)</text>\n";

  // Axes and ticks.
  svg += "<g stroke=\"black\" stroke-width=\"1\">\n";
  svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop + plot_h) + "\" x2=\"" + num(kLeft + plot_w) +
         "\" y2=\"" + num(kTop + plot_h) + "\"/>\n";
  svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) + "\" y2=\"" +
         num(kTop + plot_h) + "\"/>\n";
  svg += "</g>\n";
  for (int i = 0; i <= 5; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 5.0;
    const double fy = ymin + (ymax - ymin) * i / 5.0;
    svg += "<line x1=\"" + num(px(fx)) + "\" y1=\"" + num(kTop + plot_h) + "\" x2=\"" + num(px(fx)) + "\" y2=\"" +
           num(kTop + plot_h + 5) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + num(px(fx)) + "\" y=\"" + num(kTop + plot_h + 18) + "\" text-anchor=\"middle\">" +
           tick_label(fx) + "</text>\n";
    svg += "<line x1=\"" + num(kLeft - 5) + "\" y1=\"" + num(py(fy)) + "\" x2=\"" + num(kLeft) + "\" y2=\"" +
           num(py(fy)) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(py(fy) + 4) + "\" text-anchor=\"end\">" + tick_label(fy) +
           "</text>\n";
  }
  svg += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"" + num(kHeight - 15) +
         "\" text-anchor=\"middle\">epoch</text>\n";
  svg += "<text x=\"20\" y=\"" + num(kTop + plot_h / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 20 " +
         num(kTop + plot_h / 2) + ")\">" + escape(name) + "</text>\n";

  // One line per arm.
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kPalette[k % std::size(kPalette)];
    std::string points;
    for (const auto& [epoch, cell] : series[k].sums) {
      if (!points.empty()) points += ' ';
      points += num(px(static_cast<double>(epoch))) + "," + num(py(cell.first / static_cast<double>(cell.second)));
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + points +
           "\"/>\n";
    if (series[k].sums.size() == 1) {
      const auto& [epoch, cell] = *series[k].sums.begin();
      svg += "<circle cx=\"" + num(px(static_cast<double>(epoch))) + "\" cy=\"" +
             num(py(cell.first / static_cast<double>(cell.second))) + "\" r=\"3\" fill=\"" + color + "\"/>\n";
    }
    const double ly = kTop + 10 + 18.0 * static_cast<double>(k);
    const double lx = kLeft + plot_w + 15;
    svg += "<g class=\"legend\"><line x1=\"" + num(lx) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(lx + 20) + "\" y2=\"" +
           num(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/><text x=\"" + num(lx + 26) + "\" y=\"" +
           num(ly + 4) + "\">" + escape(series[k].arm) + "</text></g>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void emit_chart(const std::vector<RunRecord>& records, ChartMetric metric, const std::filesystem::path& path) {
  if (records.empty()) throw std::invalid_argument("emit_chart: empty records");
  write_file_atomic(path, render_chart_svg(records, metric));
}

}  // namespace gqh

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gqh/records.hpp"

namespace gqh {

/// Columns of records.csv that can be charted.
enum class ChartMetric { Loss, W1Oracle, Risk, B };

std::optional<ChartMetric> parse_chart_metric(std::string_view name);
std::string_view to_string(ChartMetric m);

/// Standalone SVG line chart of `metric` against epoch, one seed-averaged line
/// per arm (in order of first appearance), with axes, labels and a legend.
/// Output depends only on the input records. Throws std::invalid_argument
/// when no record carries the metric.
std::string render_chart_svg(const std::vector<RunRecord>& records, ChartMetric metric);

void emit_chart(const std::vector<RunRecord>& records, ChartMetric metric, const std::filesystem::path& path);

}  // namespace gqh

#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gridsurrogate/metrics.hpp"

namespace gs {

nlohmann::ordered_json metrics_to_json(const Metrics& m);
Metrics metrics_from_json(const nlohmann::ordered_json& j);

nlohmann::ordered_json error_stats_to_json(const ErrorStats& s);
ErrorStats error_stats_from_json(const nlohmann::ordered_json& j);

/// "97.86 %" style formatting of a ratio.
std::string format_percent(double ratio, int decimals = 2);

struct MetricsRow {
    std::string label;
    Metrics metrics;
};

/// CSV with the FN/FP/correct/total/FPR/FNR/accuracy column set; absent
/// ratios are written as empty cells.
void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows);

/// One column per named series, padded with empty cells when lengths differ.
void write_curve_csv(const std::string& path,
                     const std::vector<std::pair<std::string, Eigen::VectorXd>>&
                         series);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace gs

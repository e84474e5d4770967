#include "gridsurrogate/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "gridsurrogate/common.hpp"

namespace gs {

using json = nlohmann::ordered_json;

namespace {

json opt_to_json(const std::optional<double>& v) {
    if (!v) return nullptr;
    return *v;
}

std::optional<double> opt_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

}  // namespace

json metrics_to_json(const Metrics& m) {
    json j;
    j["counts"] = json{{"tp", m.counts.tp},
                       {"fp", m.counts.fp},
                       {"tn", m.counts.tn},
                       {"fn", m.counts.fn}};
    j["recall"] = opt_to_json(m.recall);
    j["precision"] = opt_to_json(m.precision);
    j["accuracy"] = opt_to_json(m.accuracy);
    j["fpr"] = opt_to_json(m.fpr);
    j["fnr"] = opt_to_json(m.fnr);
    return j;
}

Metrics metrics_from_json(const json& j) {
    Metrics m;
    m.counts.tp = j.at("counts").at("tp").get<std::int64_t>();
    m.counts.fp = j.at("counts").at("fp").get<std::int64_t>();
    m.counts.tn = j.at("counts").at("tn").get<std::int64_t>();
    m.counts.fn = j.at("counts").at("fn").get<std::int64_t>();
    m.recall = opt_from_json(j.at("recall"));
    m.precision = opt_from_json(j.at("precision"));
    m.accuracy = opt_from_json(j.at("accuracy"));
    m.fpr = opt_from_json(j.at("fpr"));
    m.fnr = opt_from_json(j.at("fnr"));
    return m;
}

json error_stats_to_json(const ErrorStats& s) {
    return json{{"mean_abs", s.mean_abs},
                {"max_abs", s.max_abs},
                {"p99_abs", s.p99_abs}};
}

ErrorStats error_stats_from_json(const json& j) {
    ErrorStats s;
    s.mean_abs = j.at("mean_abs").get<double>();
    s.max_abs = j.at("max_abs").get<double>();
    s.p99_abs = j.at("p99_abs").get<double>();
    return s;
}

std::string format_percent(double ratio, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f %%", decimals, ratio * 100.0);
    return buf;
}

namespace {

std::string cell(const std::optional<double>& v) {
    if (!v) return "";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", *v);
    return buf;
}

}  // namespace

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows) {
    std::ostringstream out;
    out << "label,fn,fp,correct,total,fpr,fnr,accuracy,recall,precision\n";
    for (const MetricsRow& r : rows) {
        out << r.label << "," << r.metrics.counts.fn << "," << r.metrics.counts.fp
            << "," << r.metrics.counts.correct() << "," << r.metrics.counts.total()
            << "," << cell(r.metrics.fpr) << "," << cell(r.metrics.fnr) << ","
            << cell(r.metrics.accuracy) << "," << cell(r.metrics.recall) << ","
            << cell(r.metrics.precision) << "\n";
    }
    write_text_file(path, out.str());
}

void write_curve_csv(
    const std::string& path,
    const std::vector<std::pair<std::string, Eigen::VectorXd>>& series) {
    std::ostringstream out;
    Eigen::Index rows = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        out << (i ? "," : "") << series[i].first;
        rows = std::max(rows, series[i].second.size());
    }
    out << "\n";
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < series.size(); ++i) {
            if (i) out << ",";
            if (r < series[i].second.size()) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.9g", series[i].second[r]);
                out << buf;
            }
        }
        out << "\n";
    }
    write_text_file(path, out.str());
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write \"" + path + "\"");
    out << content;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open \"" + path + "\"");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace gs

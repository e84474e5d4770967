#pragma once

#include <complex>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace gs {

enum class BusKind { Slack, Pv, Pq };
enum class InjectorKind { Load, Res, Conventional };

std::string to_string(BusKind k);
std::string to_string(InjectorKind k);
BusKind bus_kind_from_string(const std::string& s);
InjectorKind injector_kind_from_string(const std::string& s);

struct Bus {
    std::string id;
    BusKind kind = BusKind::Pq;
    std::optional<double> vm_setpoint;  // p.u., slack and PV buses only
    std::optional<double> vm_min;       // p.u., falls back to OperatingLimits
    std::optional<double> vm_max;
};

struct Line {
    std::string id;
    std::string from_bus;
    std::string to_bus;
    double r_pu = 0.0;
    double x_pu = 0.0;
    double b_pu = 0.0;       // total shunt susceptance, split half per end
    double i_rated_ka = 0.0; // rated current I_r
};

struct Injector {
    std::string id;
    std::string bus;
    InjectorKind kind = InjectorKind::Load;
    double p_max_mw = 0.0;
    std::string profile_id;
};

struct OperatingLimits {
    double i_limit_pct = 60.0;
    double vm_min = 0.9;
    double vm_max = 1.1;
};

/// Static network description. Immutable after construction; per-unit on
/// (base_mva, base_kv) internally, file units are MW / MVAr / kA / kV.
class Grid {
  public:
    Grid(double base_mva, double base_kv, std::vector<Bus> buses,
         std::vector<Line> lines, std::vector<Injector> loads,
         std::vector<Injector> generators, OperatingLimits limits);

    double base_mva() const { return base_mva_; }
    double base_kv() const { return base_kv_; }
    /// Current base in kA: S = sqrt(3) * V_ll * I.
    double base_ka() const;

    const std::vector<Bus>& buses() const { return buses_; }
    const std::vector<Line>& lines() const { return lines_; }
    const std::vector<Injector>& loads() const { return loads_; }
    const std::vector<Injector>& generators() const { return generators_; }
    const OperatingLimits& limits() const { return limits_; }

    int n_bus() const { return static_cast<int>(buses_.size()); }
    int n_line() const { return static_cast<int>(lines_.size()); }

    int bus_index(const std::string& id) const;
    int line_index(const std::string& id) const;
    int slack_index() const { return slack_index_; }

    double bus_vm_min(int bus) const;
    double bus_vm_max(int bus) const;

    /// True when the graph stays connected after removing `without_line`
    /// (pass -1 for the base topology).
    bool connected_without(int without_line) const;

    std::string to_json_string() const;

  private:
    void validate() const;

    double base_mva_;
    double base_kv_;
    std::vector<Bus> buses_;
    std::vector<Line> lines_;
    std::vector<Injector> loads_;
    std::vector<Injector> generators_;
    OperatingLimits limits_;
    std::map<std::string, int> bus_index_;
    std::map<std::string, int> line_index_;
    int slack_index_ = -1;
};

Grid load_grid(const std::string& path);
Grid grid_from_json_string(const std::string& text);

/// Sparse nodal admittance matrix (pi-model), optionally with one line
/// out of service.
struct AdmittanceMatrix {
    Eigen::SparseMatrix<std::complex<double>> y;
    std::optional<std::string> outage;  // line id
};

AdmittanceMatrix build_admittance(const Grid& grid,
                                  const std::optional<std::string>& outage = {});

/// Per-element real/reactive power profiles over T steps, per-unit
/// internally. Columns are keyed by profile id.
class TimeSeries {
  public:
    struct Column {
        std::vector<double> p;  // p.u.
        std::vector<double> q;  // p.u.
    };

    TimeSeries(int step_count, int resolution_min, double base_mva,
               std::map<std::string, Column> columns);

    int step_count() const { return step_count_; }
    int resolution_min() const { return resolution_min_; }
    double base_mva() const { return base_mva_; }

    const Column& column(const std::string& profile_id) const;
    bool has_column(const std::string& profile_id) const;
    const std::map<std::string, Column>& columns() const { return columns_; }

    void write_csv(const std::string& path) const;
    std::string to_csv_string() const;

  private:
    int step_count_;
    int resolution_min_;
    double base_mva_;
    std::map<std::string, Column> columns_;
};

TimeSeries load_time_series(const std::string& path, const Grid& grid);
TimeSeries time_series_from_csv_string(const std::string& text, const Grid& grid);

/// Net complex power injection per bus at one step (generation positive,
/// consumption negative). Reactive entries of PV/slack buses carry the
/// known load/RES values; the solver ignores them there.
Eigen::VectorXcd aggregate_bus_injections(const Grid& grid, const TimeSeries& ts,
                                          int step);

}  // namespace gs

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gridsurrogate/grid.hpp"
#include "gridsurrogate/power_flow.hpp"

namespace gs {

struct ContingencyCase {
    int index = 0;
    std::optional<std::string> outage;  // absent = base case
};

struct CaseEnumeration {
    std::vector<ContingencyCase> cases;        // base case first
    std::vector<std::string> islanding_lines;  // excluded outages
};

/// Base case plus one case per line whose removal keeps the grid
/// connected; islanding outages are excluded and reported.
CaseEnumeration enumerate_cases(const Grid& grid);

struct SweepRecord {
    int case_index = 0;
    int step = 0;
    bool converged = false;
    Eigen::VectorXd vm;       // empty when not converged
    Eigen::VectorXd loading;  // empty when not converged
    int label = 0;            // ±1, valid iff converged
};

struct SweepTiming {
    double total_seconds = 0.0;
    double mean_solve_seconds = 0.0;
};

/// Per-(case, step) results of the (N+1)*T sweep, case-major.
/// Timing lives only in memory; the file format carries no wall-clock
/// values so equal-seed runs stay byte-identical.
class SweepResultStore {
  public:
    SweepResultStore() = default;
    SweepResultStore(std::uint64_t grid_hash, std::vector<ContingencyCase> cases,
                     std::vector<int> steps, OperatingLimits limits, int n_bus,
                     int n_line);

    const std::vector<ContingencyCase>& cases() const { return cases_; }
    const std::vector<int>& steps() const { return steps_; }
    const OperatingLimits& limits() const { return limits_; }
    std::uint64_t grid_hash() const { return grid_hash_; }
    int n_bus() const { return n_bus_; }
    int n_line() const { return n_line_; }

    const SweepRecord& record(int case_pos, int step_pos) const;
    SweepRecord& record(int case_pos, int step_pos);
    const std::vector<SweepRecord>& records() const { return records_; }

    int case_position(int case_index) const;

    SweepTiming& timing() { return timing_; }
    const SweepTiming& timing() const { return timing_; }

    std::string to_jsonl_string() const;
    void save(const std::string& path) const;
    static SweepResultStore load(const std::string& path);
    static SweepResultStore from_jsonl_string(const std::string& text);

  private:
    std::uint64_t grid_hash_ = 0;
    std::vector<ContingencyCase> cases_;
    std::vector<int> steps_;
    OperatingLimits limits_;
    int n_bus_ = 0;
    int n_line_ = 0;
    std::vector<SweepRecord> records_;
    SweepTiming timing_;
};

struct SweepOptions {
    PowerFlowOptions power_flow;
    int workers = 1;
};

/// Runs every (case, step) power flow and labels converged states.
/// Work is partitioned by case; identical results for any worker count.
SweepResultStore run_sweep(const Grid& grid, const TimeSeries& ts,
                           const std::vector<ContingencyCase>& cases,
                           const std::vector<int>& steps,
                           const SweepOptions& options = {});

struct LabelMatrix {
    // aligned to store.steps(); label 0 marks a non-converged entry
    std::vector<std::vector<int>> labels;       // per case
    std::vector<std::vector<bool>> converged;   // per case
    int non_converged_count = 0;
};

LabelMatrix label_matrix(const SweepResultStore& store);

}  // namespace gs

#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "gridsurrogate/grid.hpp"

namespace gs {

struct PowerFlowOptions {
    double tolerance = 1e-8;  // p.u. power mismatch
    int max_iterations = 30;
};

struct PowerFlowSolution {
    Eigen::VectorXd vm;            // p.u., per bus
    Eigen::VectorXd va;            // rad, per bus
    Eigen::VectorXd line_loading;  // percent of I_r, per line (0 for an outaged line)
    bool converged = false;
    int iterations = 0;
    double max_mismatch = 0.0;
    std::string failure_reason;  // set when converged == false
};

/// Newton-Raphson on the polar mismatch equations, flat start. Non-fatal
/// failure modes (iteration limit, singular Jacobian, islanded topology)
/// are reported via converged/failure_reason so contingency sweeps can
/// record and continue.
PowerFlowSolution solve_power_flow(const Grid& grid, const AdmittanceMatrix& ybus,
                                   const Eigen::VectorXcd& injections,
                                   const PowerFlowOptions& options = {});

struct Violation {
    std::string element_id;
    std::string quantity;  // "vm" or "loading"
    double value;
    double limit;
};

struct SecurityLabel {
    int value = -1;  // +1 critical, -1 uncritical
    std::vector<Violation> violated_elements;
};

/// +1 iff any bus voltage leaves its band or any line loading exceeds
/// i_limit_pct. Requires a converged solution.
SecurityLabel classify_state(const Grid& grid, const PowerFlowSolution& solution,
                             const OperatingLimits& limits);

inline SecurityLabel classify_state(const Grid& grid,
                                    const PowerFlowSolution& solution) {
    return classify_state(grid, solution, grid.limits());
}

/// Max |ΔP|,|ΔQ| of the mismatch equations at (vm, va); the independent
/// residual check behind the convergence flag.
double power_mismatch(const Grid& grid, const AdmittanceMatrix& ybus,
                      const Eigen::VectorXcd& injections,
                      const Eigen::VectorXd& vm, const Eigen::VectorXd& va);

}  // namespace gs

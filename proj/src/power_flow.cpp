#include "gridsurrogate/power_flow.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

namespace gs {

namespace {

struct BusSets {
    std::vector<int> ang;          // non-slack buses (angle unknowns)
    std::vector<int> pq;           // PQ buses (magnitude unknowns)
    std::vector<int> ang_pos;      // bus -> position in ang, -1 otherwise
    std::vector<int> pq_pos;       // bus -> position in pq, -1 otherwise
};

BusSets make_bus_sets(const Grid& grid) {
    BusSets s;
    s.ang_pos.assign(grid.n_bus(), -1);
    s.pq_pos.assign(grid.n_bus(), -1);
    for (int i = 0; i < grid.n_bus(); ++i) {
        const BusKind k = grid.buses()[i].kind;
        if (k != BusKind::Slack) {
            s.ang_pos[i] = static_cast<int>(s.ang.size());
            s.ang.push_back(i);
        }
        if (k == BusKind::Pq) {
            s.pq_pos[i] = static_cast<int>(s.pq.size());
            s.pq.push_back(i);
        }
    }
    return s;
}

/// P_i = vm_i sum_j vm_j (G_ij cos th_ij + B_ij sin th_ij), Q analogous.
void calc_injections(const Eigen::SparseMatrix<std::complex<double>>& y,
                     const Eigen::VectorXd& vm, const Eigen::VectorXd& va,
                     Eigen::VectorXd& p, Eigen::VectorXd& q) {
    p.setZero(vm.size());
    q.setZero(vm.size());
    for (int k = 0; k < y.outerSize(); ++k) {
        for (Eigen::SparseMatrix<std::complex<double>>::InnerIterator it(y, k);
             it; ++it) {
            const int i = static_cast<int>(it.row());
            const int j = static_cast<int>(it.col());
            const double g = it.value().real();
            const double b = it.value().imag();
            const double th = va[i] - va[j];
            const double c = std::cos(th), s = std::sin(th);
            const double vv = vm[i] * vm[j];
            p[i] += vv * (g * c + b * s);
            q[i] += vv * (g * s - b * c);
        }
    }
}

double max_mismatch_of(const Grid& grid, const BusSets& sets,
                       const Eigen::VectorXcd& injections,
                       const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    double m = 0.0;
    for (int i : sets.ang) m = std::max(m, std::abs(injections[i].real() - p[i]));
    for (int i : sets.pq) m = std::max(m, std::abs(injections[i].imag() - q[i]));
    (void)grid;
    return m;
}

void compute_line_loadings(const Grid& grid, const AdmittanceMatrix& ybus,
                           const Eigen::VectorXd& vm, const Eigen::VectorXd& va,
                           Eigen::VectorXd& loading) {
    loading.setZero(grid.n_line());
    int skip = -1;
    if (ybus.outage) skip = grid.line_index(*ybus.outage);
    const double base_ka = grid.base_ka();
    for (int i = 0; i < grid.n_line(); ++i) {
        if (i == skip) continue;
        const Line& l = grid.lines()[i];
        const int f = grid.bus_index(l.from_bus);
        const int t = grid.bus_index(l.to_bus);
        const std::complex<double> vf = std::polar(vm[f], va[f]);
        const std::complex<double> vt = std::polar(vm[t], va[t]);
        const std::complex<double> ys = 1.0 / std::complex<double>(l.r_pu, l.x_pu);
        const std::complex<double> ysh(0.0, l.b_pu / 2.0);
        const double i_from = std::abs((vf - vt) * ys + vf * ysh);
        const double i_to = std::abs((vt - vf) * ys + vt * ysh);
        loading[i] = 100.0 * std::max(i_from, i_to) * base_ka / l.i_rated_ka;
    }
}

}  // namespace

double power_mismatch(const Grid& grid, const AdmittanceMatrix& ybus,
                      const Eigen::VectorXcd& injections,
                      const Eigen::VectorXd& vm, const Eigen::VectorXd& va) {
    const BusSets sets = make_bus_sets(grid);
    Eigen::VectorXd p, q;
    calc_injections(ybus.y, vm, va, p, q);
    return max_mismatch_of(grid, sets, injections, p, q);
}

PowerFlowSolution solve_power_flow(const Grid& grid, const AdmittanceMatrix& ybus,
                                   const Eigen::VectorXcd& injections,
                                   const PowerFlowOptions& options) {
    PowerFlowSolution sol;
    const int n = grid.n_bus();
    const BusSets sets = make_bus_sets(grid);
    const int n_ang = static_cast<int>(sets.ang.size());
    const int n_pq = static_cast<int>(sets.pq.size());
    const int n_eq = n_ang + n_pq;

    // flat start; PV and slack magnitudes are fixed at their setpoints
    sol.vm.setOnes(n);
    sol.va.setZero(n);
    for (int i = 0; i < n; ++i) {
        if (grid.buses()[i].kind != BusKind::Pq)
            sol.vm[i] = *grid.buses()[i].vm_setpoint;
    }

    int outage_index = -1;
    if (ybus.outage) outage_index = grid.line_index(*ybus.outage);
    if (!grid.connected_without(outage_index)) {
        sol.failure_reason = "disconnected active graph";
        return sol;
    }

    Eigen::VectorXd p(n), q(n);
    std::vector<Eigen::Triplet<double>> trip;
    for (int iter = 0;; ++iter) {
        calc_injections(ybus.y, sol.vm, sol.va, p, q);
        sol.max_mismatch = max_mismatch_of(grid, sets, injections, p, q);
        sol.iterations = iter;
        if (sol.max_mismatch <= options.tolerance) {
            sol.converged = true;
            break;
        }
        if (iter >= options.max_iterations) {
            sol.failure_reason = "iteration limit reached";
            break;
        }

        Eigen::VectorXd rhs(n_eq);
        for (int a = 0; a < n_ang; ++a) {
            const int i = sets.ang[a];
            rhs[a] = injections[i].real() - p[i];
        }
        for (int b = 0; b < n_pq; ++b) {
            const int i = sets.pq[b];
            rhs[n_ang + b] = injections[i].imag() - q[i];
        }

        trip.clear();
        for (int k = 0; k < ybus.y.outerSize(); ++k) {
            for (Eigen::SparseMatrix<std::complex<double>>::InnerIterator it(
                     ybus.y, k);
                 it; ++it) {
                const int i = static_cast<int>(it.row());
                const int j = static_cast<int>(it.col());
                const double g = it.value().real();
                const double b = it.value().imag();
                const int pi = sets.ang_pos[i];
                const int qi = sets.pq_pos[i];
                if (i == j) {
                    const double vi = sol.vm[i];
                    if (pi >= 0) {
                        trip.emplace_back(pi, pi, -q[i] - b * vi * vi);
                        if (qi >= 0)
                            trip.emplace_back(pi, n_ang + qi, p[i] / vi + g * vi);
                    }
                    if (qi >= 0) {
                        trip.emplace_back(n_ang + qi, pi, p[i] - g * vi * vi);
                        trip.emplace_back(n_ang + qi, n_ang + qi,
                                          q[i] / vi - b * vi);
                    }
                    continue;
                }
                const int pj = sets.ang_pos[j];
                const int qj = sets.pq_pos[j];
                const double th = sol.va[i] - sol.va[j];
                const double c = std::cos(th), s = std::sin(th);
                const double a_ij = g * c + b * s;
                const double b_ij = g * s - b * c;
                const double vv = sol.vm[i] * sol.vm[j];
                if (pi >= 0 && pj >= 0) trip.emplace_back(pi, pj, vv * b_ij);
                if (pi >= 0 && qj >= 0)
                    trip.emplace_back(pi, n_ang + qj, sol.vm[i] * a_ij);
                if (qi >= 0 && pj >= 0)
                    trip.emplace_back(n_ang + qi, pj, -vv * a_ij);
                if (qi >= 0 && qj >= 0)
                    trip.emplace_back(n_ang + qi, n_ang + qj, sol.vm[i] * b_ij);
            }
        }
        Eigen::SparseMatrix<double> jac(n_eq, n_eq);
        jac.setFromTriplets(trip.begin(), trip.end());
        jac.makeCompressed();

        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(jac);
        if (lu.info() != Eigen::Success) {
            sol.failure_reason = "singular Jacobian";
            break;
        }
        const Eigen::VectorXd dx = lu.solve(rhs);
        if (!dx.allFinite()) {
            sol.failure_reason = "singular Jacobian";
            break;
        }
        for (int a = 0; a < n_ang; ++a) sol.va[sets.ang[a]] += dx[a];
        for (int b = 0; b < n_pq; ++b) sol.vm[sets.pq[b]] += dx[n_ang + b];
        if (!sol.vm.allFinite() || sol.vm.minCoeff() <= 0.0) {
            sol.failure_reason = "diverged to non-physical voltage";
            break;
        }
    }

    if (sol.converged)
        compute_line_loadings(grid, ybus, sol.vm, sol.va, sol.line_loading);
    else
        sol.line_loading.setZero(grid.n_line());
    return sol;
}

SecurityLabel classify_state(const Grid& grid, const PowerFlowSolution& solution,
                             const OperatingLimits& limits) {
    if (!solution.converged)
        throw std::invalid_argument(
            "classify_state called on a non-converged solution");
    SecurityLabel label;
    for (int i = 0; i < grid.n_bus(); ++i) {
        const double lo = grid.buses()[i].vm_min.value_or(limits.vm_min);
        const double hi = grid.buses()[i].vm_max.value_or(limits.vm_max);
        const double v = solution.vm[i];
        if (v < lo)
            label.violated_elements.push_back({grid.buses()[i].id, "vm", v, lo});
        else if (v > hi)
            label.violated_elements.push_back({grid.buses()[i].id, "vm", v, hi});
    }
    for (int i = 0; i < grid.n_line(); ++i) {
        const double ld = solution.line_loading[i];
        if (ld > limits.i_limit_pct)
            label.violated_elements.push_back(
                {grid.lines()[i].id, "loading", ld, limits.i_limit_pct});
    }
    label.value = label.violated_elements.empty() ? -1 : +1;
    return label;
}

}  // namespace gs

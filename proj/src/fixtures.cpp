#include "gridsurrogate/fixtures.hpp"

#include <algorithm>
#include <cmath>

#include "gridsurrogate/common.hpp"

namespace gs::fixtures {

std::string demo3_json() {
    return R"({
  "base_mva": 100.0,
  "base_kv": 110.0,
  "buses": [
    {"id": "b1", "kind": "slack", "vm_setpoint": 1.0},
    {"id": "b2", "kind": "pq"},
    {"id": "b3", "kind": "pq"}
  ],
  "lines": [
    {"id": "l1", "from_bus": "b1", "to_bus": "b2", "r_pu": 0.0, "x_pu": 0.1, "b_pu": 0.0, "i_rated": 0.6},
    {"id": "l2", "from_bus": "b2", "to_bus": "b3", "r_pu": 0.0, "x_pu": 0.1, "b_pu": 0.0, "i_rated": 0.6},
    {"id": "l3", "from_bus": "b1", "to_bus": "b3", "r_pu": 0.0, "x_pu": 0.1, "b_pu": 0.0, "i_rated": 0.6}
  ],
  "loads": [
    {"id": "ld2", "bus": "b2", "kind": "load", "p_max": 30.0, "profile_id": "load_2"}
  ],
  "generators": [
    {"id": "pv3", "bus": "b3", "kind": "res", "p_max": 20.0, "profile_id": "pv_3"}
  ],
  "limits": {"i_limit_pct": 60.0, "vm_min": 0.9, "vm_max": 1.1}
})";
}

std::string demo9_json() {
    return R"({
  "base_mva": 100.0,
  "base_kv": 110.0,
  "buses": [
    {"id": "b1", "kind": "slack", "vm_setpoint": 1.02},
    {"id": "b2", "kind": "pv", "vm_setpoint": 1.01},
    {"id": "b3", "kind": "pq"},
    {"id": "b4", "kind": "pq"},
    {"id": "b5", "kind": "pq"},
    {"id": "b6", "kind": "pq"},
    {"id": "b7", "kind": "pq"},
    {"id": "b8", "kind": "pq"},
    {"id": "b9", "kind": "pq"}
  ],
  "lines": [
    {"id": "l1",  "from_bus": "b1", "to_bus": "b3", "r_pu": 0.018, "x_pu": 0.072, "b_pu": 0.012, "i_rated": 0.40},
    {"id": "l2",  "from_bus": "b1", "to_bus": "b4", "r_pu": 0.022, "x_pu": 0.090, "b_pu": 0.014, "i_rated": 0.40},
    {"id": "l3",  "from_bus": "b2", "to_bus": "b5", "r_pu": 0.020, "x_pu": 0.080, "b_pu": 0.012, "i_rated": 0.38},
    {"id": "l4",  "from_bus": "b2", "to_bus": "b6", "r_pu": 0.026, "x_pu": 0.105, "b_pu": 0.016, "i_rated": 0.36},
    {"id": "l5",  "from_bus": "b3", "to_bus": "b4", "r_pu": 0.030, "x_pu": 0.120, "b_pu": 0.018, "i_rated": 0.30},
    {"id": "l6",  "from_bus": "b3", "to_bus": "b5", "r_pu": 0.028, "x_pu": 0.112, "b_pu": 0.017, "i_rated": 0.32},
    {"id": "l7",  "from_bus": "b4", "to_bus": "b7", "r_pu": 0.024, "x_pu": 0.096, "b_pu": 0.015, "i_rated": 0.34},
    {"id": "l8",  "from_bus": "b5", "to_bus": "b8", "r_pu": 0.026, "x_pu": 0.104, "b_pu": 0.016, "i_rated": 0.34},
    {"id": "l9",  "from_bus": "b6", "to_bus": "b9", "r_pu": 0.034, "x_pu": 0.135, "b_pu": 0.020, "i_rated": 0.30},
    {"id": "l10", "from_bus": "b7", "to_bus": "b8", "r_pu": 0.032, "x_pu": 0.128, "b_pu": 0.019, "i_rated": 0.28},
    {"id": "l11", "from_bus": "b8", "to_bus": "b9", "r_pu": 0.030, "x_pu": 0.120, "b_pu": 0.018, "i_rated": 0.28},
    {"id": "l12", "from_bus": "b7", "to_bus": "b9", "r_pu": 0.036, "x_pu": 0.144, "b_pu": 0.021, "i_rated": 0.26}
  ],
  "loads": [
    {"id": "ld3", "bus": "b3", "kind": "load", "p_max": 20.0, "profile_id": "load_3"},
    {"id": "ld5", "bus": "b5", "kind": "load", "p_max": 25.0, "profile_id": "load_5"},
    {"id": "ld6", "bus": "b6", "kind": "load", "p_max": 10.0, "profile_id": "load_6"},
    {"id": "ld7", "bus": "b7", "kind": "load", "p_max": 18.0, "profile_id": "load_7"},
    {"id": "ld8", "bus": "b8", "kind": "load", "p_max": 22.0, "profile_id": "load_8"},
    {"id": "ld9", "bus": "b9", "kind": "load", "p_max": 16.0, "profile_id": "load_9"}
  ],
  "generators": [
    {"id": "g1",    "bus": "b2", "kind": "conventional", "p_max": 40.0, "profile_id": "conv_1"},
    {"id": "pv4",   "bus": "b4", "kind": "res", "p_max": 25.0, "profile_id": "pv_4"},
    {"id": "pv6",   "bus": "b6", "kind": "res", "p_max": 20.0, "profile_id": "pv_6"},
    {"id": "pv8",   "bus": "b8", "kind": "res", "p_max": 18.0, "profile_id": "pv_8"},
    {"id": "wind8", "bus": "b8", "kind": "res", "p_max": 12.0, "profile_id": "wind_8"}
  ],
  "limits": {"i_limit_pct": 60.0, "vm_min": 0.9, "vm_max": 1.1}
})";
}

Grid demo3() { return grid_from_json_string(demo3_json()); }
Grid demo9() { return grid_from_json_string(demo9_json()); }

namespace {

enum class Shape { Load, Solar, Wind, Dispatch };

Shape shape_of(const Injector& inj, int res_ordinal) {
    if (inj.kind == InjectorKind::Load) return Shape::Load;
    if (inj.kind == InjectorKind::Conventional) return Shape::Dispatch;
    if (inj.profile_id.find("pv") != std::string::npos ||
        inj.profile_id.find("solar") != std::string::npos)
        return Shape::Solar;
    if (inj.profile_id.find("wind") != std::string::npos) return Shape::Wind;
    return res_ordinal % 2 == 0 ? Shape::Solar : Shape::Wind;
}

}  // namespace

TimeSeries make_synthetic_year(const Grid& grid, int steps, std::uint64_t seed,
                               int resolution_min) {
    if (steps <= 0) throw std::invalid_argument("steps must be > 0");
    const double tan_phi = std::tan(std::acos(0.95));

    struct Unit {
        const Injector* inj;
        Shape shape;
        std::uint64_t stream;
    };
    std::vector<Unit> units;
    int res_ordinal = 0;
    std::uint64_t stream = 0;
    for (const Injector& inj : grid.loads())
        units.push_back({&inj, Shape::Load, stream++});
    for (const Injector& inj : grid.generators()) {
        const Shape s = shape_of(inj, res_ordinal);
        if (inj.kind == InjectorKind::Res) ++res_ordinal;
        units.push_back({&inj, s, stream++});
    }

    std::map<std::string, TimeSeries::Column> columns;
    for (const Unit& u : units) {
        Rng rng(derive_seed(seed, u.stream));
        const double p_max = u.inj->p_max_mw / grid.base_mva();
        const double phase = rng.uniform(0.0, 2.0 * M_PI);
        std::vector<double> p(steps, 0.0), q(steps, 0.0);
        double ar = 0.0;          // smooth noise state
        double wind = rng.uniform(0.2, 0.7);
        for (int t = 0; t < steps; ++t) {
            const double hour =
                std::fmod(t * resolution_min / 60.0, 24.0);
            const int day = t * resolution_min / 1440;
            const double season =
                1.0 + 0.15 * std::cos(2.0 * M_PI * t / steps + phase * 0.1);
            ar = 0.9 * ar + 0.1 * rng.normal(0.0, 1.0);
            double frac = 0.0;
            switch (u.shape) {
                case Shape::Load: {
                    const double daily =
                        0.65 + 0.35 * std::max(0.0, std::sin(M_PI * (hour - 6.0) /
                                                             15.0));
                    const double weekly = (day % 7 >= 5) ? 0.82 : 1.0;
                    frac = 0.85 * daily * weekly * season * (1.0 + 0.08 * ar);
                    break;
                }
                case Shape::Solar: {
                    const double bell = std::max(
                        0.0, std::sin(M_PI * (hour - 6.0) / 12.0));
                    const double cloud =
                        std::clamp(0.75 + 0.35 * ar, 0.15, 1.0);
                    frac = std::pow(bell, 1.4) * cloud * season;
                    break;
                }
                case Shape::Wind: {
                    wind = std::clamp(
                        wind + 0.06 * rng.normal(0.0, 1.0) +
                            0.01 * (0.45 - wind),
                        0.02, 1.0);
                    frac = wind * season;
                    break;
                }
                case Shape::Dispatch: {
                    const double daily =
                        0.65 + 0.35 * std::max(0.0, std::sin(M_PI * (hour - 6.0) /
                                                             15.0));
                    frac = (0.30 + 0.45 * daily) * (1.0 + 0.05 * ar);
                    break;
                }
            }
            frac = std::clamp(frac, 0.0, 1.0);
            p[t] = frac * p_max;
            if (u.shape == Shape::Load)
                q[t] = p[t] * tan_phi * (1.0 + 0.02 * rng.normal(0.0, 1.0));
        }
        TimeSeries::Column& col = columns[u.inj->profile_id];
        col.p = std::move(p);
        col.q = std::move(q);
    }
    return TimeSeries(steps, resolution_min, grid.base_mva(), std::move(columns));
}

}  // namespace gs::fixtures

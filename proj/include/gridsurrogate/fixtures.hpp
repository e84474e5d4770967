#pragma once

#include <cstdint>
#include <string>

#include "gridsurrogate/grid.hpp"

namespace gs::fixtures {

/// 3-bus triangle, one slack, purely reactive lines. Small enough that
/// admittance entries and power flows can be checked by hand.
std::string demo3_json();

/// 9-bus meshed 110 kV demo grid with loads, solar/wind in-feed and one
/// PV-node generator. Sized so a year of operation produces both
/// uncritical and critical loading situations.
std::string demo9_json();

Grid demo3();
Grid demo9();

/// Seeded synthetic "mini-year": daily/weekly/seasonal load shapes,
/// solar bell curves with cloud noise, mean-reverting wind, dispatchable
/// conventional units. Deterministic in (grid, steps, seed).
TimeSeries make_synthetic_year(const Grid& grid, int steps, std::uint64_t seed,
                               int resolution_min = 15);

}  // namespace gs::fixtures

#pragma once

#include <complex>
#include <span>
#include <vector>

#include "stopf/network.hpp"

namespace stopf {

struct BranchFlow {
    double p = 0.0;
    double q = 0.0;
    double s = 0.0;
};

/// Sending-end flow from bus i towards bus j over `line` (i may be either end; the PI model
/// is symmetric).
BranchFlow line_flow(double v_i, double delta_i, double v_j, double delta_j, const Line& line);

/// Current phasor leaving bus i into the line, including the bus-i half of the charging.
std::complex<double> line_current(double v_i, double delta_i, double v_j, double delta_j, const Line& line);

/// Active series loss p_ij + p_ji.
double line_loss(double v_i, double delta_i, double v_j, double delta_j, const Line& line);

/// Fuel cost in EUR/h for dispatch in MW. Decommitted units cost nothing but must be at 0 MW.
/// An empty `committed` means every unit is on.
double generation_cost(std::span<const double> p_mw, const std::vector<Generator>& generators,
                       const std::vector<bool>& committed = {});

}  // namespace stopf

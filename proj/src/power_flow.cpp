#include "stopf/power_flow.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace stopf {

BranchFlow line_flow(double v_i, double delta_i, double v_j, double delta_j, const Line& line) {
    const double z = line.z_mag;
    const double th = line.z_ang;
    const double ang = delta_i - delta_j + th;
    BranchFlow f;
    f.p = v_i * v_i / z * std::cos(th) - v_i * v_j / z * std::cos(ang);
    f.q = v_i * v_i / z * std::sin(th) - v_i * v_j / z * std::sin(ang) - line.b_shunt * v_i * v_i / 2.0;
    f.s = std::hypot(f.p, f.q);
    return f;
}

std::complex<double> line_current(double v_i, double delta_i, double v_j, double delta_j, const Line& line) {
    const std::complex<double> vi = std::polar(v_i, delta_i);
    const std::complex<double> vj = std::polar(v_j, delta_j);
    const std::complex<double> z = std::polar(line.z_mag, line.z_ang);
    return (vi - vj) / z + std::polar(line.b_shunt * v_i / 2.0, delta_i + std::numbers::pi / 2.0);
}

double line_loss(double v_i, double delta_i, double v_j, double delta_j, const Line& line) {
    return line_flow(v_i, delta_i, v_j, delta_j, line).p + line_flow(v_j, delta_j, v_i, delta_i, line).p;
}

double generation_cost(std::span<const double> p_mw, const std::vector<Generator>& generators,
                       const std::vector<bool>& committed) {
    if (p_mw.size() != generators.size()) throw InputError("generation_cost: dispatch size mismatch");
    if (!committed.empty() && committed.size() != generators.size()) {
        throw InputError("generation_cost: commitment size mismatch");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < generators.size(); ++k) {
        const bool on = committed.empty() || committed[k];
        const double p = p_mw[k];
        if (!on) {
            if (std::abs(p) > 1e-9) {
                throw InputError("generation_cost: G" + std::to_string(k + 1) + " is decommitted but dispatched at " +
                                 std::to_string(p) + " MW");
            }
            continue;
        }
        const Generator& g = generators[k];
        total += g.cost_a * p * p + g.cost_b * p + g.cost_c;
    }
    return total;
}

}  // namespace stopf

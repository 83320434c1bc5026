// Exhaustive grid search for the three-bus fixture. Writes the best grid point as JSON.
// Uses its own admittance-matrix power flow; only the scalar transformer balance comes
// from the library.
#include <json.hpp>

#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "stopf/network.hpp"
#include "stopf/st_model.hpp"

using namespace stopf;
using cd = std::complex<double>;

namespace {

struct Grid {
    double v_s_lo = 0.9, v_s_hi = 1.1;
    double q_lo = -0.4, q_hi = 0.4;
    double pg2_lo = 0.0, pg2_hi = 0.6;
    double step = 1e-3;
};

struct Net {
    std::array<std::array<cd, 3>, 3> y{};
};

Net build(const Case& c) {
    Net n;
    for (const Line& l : c.lines) {
        const int i = l.from - 1, j = l.to - 1;
        const cd ys = 1.0 / std::polar(l.z_mag, l.z_ang);
        const cd sh(0.0, l.b_shunt / 2.0);
        n.y[i][i] += ys + sh;
        n.y[j][j] += ys + sh;
        n.y[i][j] -= ys;
        n.y[j][i] -= ys;
    }
    return n;
}

std::array<cd, 3> injections(const Net& n, const std::array<double, 3>& v, const std::array<double, 3>& d) {
    std::array<cd, 3> u{}, s{};
    for (int i = 0; i < 3; ++i) u[i] = std::polar(v[i], d[i]);
    for (int i = 0; i < 3; ++i) {
        cd cur = 0.0;
        for (int j = 0; j < 3; ++j) cur += n.y[i][j] * u[j];
        s[i] = u[i] * std::conj(cur);
    }
    return s;
}

struct Point {
    double cost = 0.0;
    double pg1 = 0.0;
    std::array<double, 3> x{};  // d2, d3, v3 at convergence
};

std::optional<Point> evaluate(const Case& c, const Net& net, const LoadSpec& load, const StParams& par, double v_s,
                              double q_st, double pg2, std::array<double, 3>& guess) {
    auto mismatch = [&](const std::array<double, 3>& x, std::array<double, 3>& f) -> bool {
        if (!(x[2] > 0.3)) return false;
        double p_st;
        try {
            p_st = solve_pcc_power(x[2], q_st, v_s, load, par).p_st;
        } catch (const StModelError&) {
            return false;
        }
        const auto s = injections(net, {1.0, 1.0, x[2]}, {0.0, x[0], x[1]});
        f = {s[1].real() - pg2, s[2].real() + p_st, s[2].imag() + q_st};
        return true;
    };
    std::array<double, 3> x = guess, f{};
    bool ok = false;
    for (int it = 0; it < 30; ++it) {
        if (!mismatch(x, f)) return std::nullopt;
        if (std::max({std::abs(f[0]), std::abs(f[1]), std::abs(f[2])}) < 1e-11) {
            ok = true;
            break;
        }
        double jm[3][3];
        for (int k = 0; k < 3; ++k) {
            std::array<double, 3> xp = x, fp{};
            const double h = 1e-7;
            xp[k] += h;
            if (!mismatch(xp, fp)) return std::nullopt;
            for (int r = 0; r < 3; ++r) jm[r][k] = (fp[r] - f[r]) / h;
        }
        // 3x3 solve by Cramer's rule.
        auto det3 = [](double a[3][3]) {
            return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                   a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
        };
        const double dt = det3(jm);
        if (std::abs(dt) < 1e-14) return std::nullopt;
        std::array<double, 3> dx{};
        for (int k = 0; k < 3; ++k) {
            double m[3][3];
            for (int r = 0; r < 3; ++r)
                for (int cc = 0; cc < 3; ++cc) m[r][cc] = cc == k ? -f[r] : jm[r][cc];
            dx[k] = det3(m) / dt;
        }
        for (int k = 0; k < 3; ++k) x[k] += dx[k];
    }
    if (!ok) return std::nullopt;

    const Bus& b3 = c.buses[2];
    if (x[2] < b3.v_min || x[2] > b3.v_max) return std::nullopt;
    const auto s = injections(net, {1.0, 1.0, x[2]}, {0.0, x[0], x[1]});
    const Generator& g1 = c.generators[0];
    const Generator& g2 = c.generators[1];
    if (s[0].real() < g1.p_min || s[0].real() > g1.p_max) return std::nullopt;
    if (s[0].imag() < g1.q_min || s[0].imag() > g1.q_max) return std::nullopt;
    if (s[1].imag() < g2.q_min || s[1].imag() > g2.q_max) return std::nullopt;
    StState st = solve_pcc_power(x[2], q_st, v_s, load, par);
    const Modulation m = recover_modulation(st, par, x[2]);
    st.m_drec = m.drec;
    st.m_qrec = m.qrec;
    st.m_dinv = m.dinv;
    st.m_qinv = m.qinv;
    if (!check_limits(st, par).empty()) return std::nullopt;
    // Line ratings from the sending end.
    const std::array<double, 3> v = {1.0, 1.0, x[2]}, d = {0.0, x[0], x[1]};
    for (const Line& l : c.lines) {
        const int i = l.from - 1, j = l.to - 1;
        const cd ys = 1.0 / std::polar(l.z_mag, l.z_ang);
        const cd ui = std::polar(v[i], d[i]), uj = std::polar(v[j], d[j]);
        const cd cur = ys * (ui - uj) + cd(0.0, l.b_shunt / 2.0) * ui;
        if (std::abs(ui * std::conj(cur)) > l.s_max) return std::nullopt;
    }
    guess = x;
    Point p;
    p.pg1 = s[0].real();
    const double b = c.base_mva;
    const double p1 = p.pg1 * b, p2 = pg2 * b;
    p.cost = g1.cost_a * p1 * p1 + g1.cost_b * p1 + g1.cost_c + g2.cost_a * p2 * p2 + g2.cost_b * p2 + g2.cost_c;
    p.x = x;
    return p;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 3) {
        std::cerr << "usage: three_bus_oracle <case.json> <out.json>\n";
        return 2;
    }
    const Case c = load_case_file(argv[1]);
    const Net net = build(c);
    const LoadSpec& load = c.loads.at(0);
    const StParams par = resolve_st_params(load, c.st_defaults);
    const Grid g;
    const auto steps = [&](double lo, double hi) { return static_cast<int>(std::lround((hi - lo) / g.step)); };

    double best = INFINITY;
    double best_vs = 0, best_q = 0, best_pg2 = 0, best_pg1 = 0;
    long feasible = 0, total = 0;
    for (int a = 0; a <= steps(g.v_s_lo, g.v_s_hi); ++a) {
        const double v_s = g.v_s_lo + a * g.step;
        for (int qi = 0; qi <= steps(g.q_lo, g.q_hi); ++qi) {
            const double q = g.q_lo + qi * g.step;
            std::array<double, 3> guess = {0.0, -0.05, 1.0};
            for (int pi = 0; pi <= steps(g.pg2_lo, g.pg2_hi); ++pi) {
                const double pg2 = g.pg2_lo + pi * g.step;
                ++total;
                const auto p = evaluate(c, net, load, par, v_s, q, pg2, guess);
                if (!p) continue;
                ++feasible;
                if (p->cost < best) {
                    best = p->cost;
                    best_vs = v_s;
                    best_q = q;
                    best_pg2 = pg2;
                    best_pg1 = p->pg1;
                }
            }
        }
    }
    nlohmann::json out = {{"objective_eur", best},       {"v_s", best_vs},         {"q_st_pu", best_q},
                          {"pg2_pu", best_pg2},          {"pg1_pu", best_pg1},     {"grid_step", g.step},
                          {"v_s_range", {g.v_s_lo, g.v_s_hi}}, {"q_st_range", {g.q_lo, g.q_hi}},
                          {"pg2_range", {g.pg2_lo, g.pg2_hi}}, {"grid_points", total}, {"feasible_points", feasible}};
    std::ofstream(argv[2]) << out.dump(2) << "\n";
    std::cout << out.dump(2) << "\n";
    return 0;
}

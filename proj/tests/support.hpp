#pragma once

#include <cmath>
#include <algorithm>
#include <random>
#include <string>

#include "stopf/ipm.hpp"
#include "stopf/network.hpp"
#include "stopf/study.hpp"

namespace stopf::test {

// Slack at bus 1, load at bus 2, one line. Generator quadratic cost.
inline std::string two_bus_json(double p_load_mw = 50.0, double q_load_mvar = 10.0, double r = 0.01, double x = 0.1) {
    const double z = std::hypot(r, x), th = std::atan2(x, r);
    return R"({"base_mva": 100,
      "buses": [{"id": 1, "kind": "slack"}, {"id": 2, "kind": "load"}],
      "lines": [{"from": 1, "to": 2, "z_mag": )" + std::to_string(z) + R"(, "z_ang": )" + std::to_string(th) +
           R"(, "b_shunt": 0, "s_max": 1000}],
      "generators": [{"bus": 1, "p_min": 0, "p_max": 300, "q_min": -300, "q_max": 300,
                      "cost_a": 0.02, "cost_b": 10, "cost_c": 100}],
      "loads": [{"bus": 2, "p0": )" + std::to_string(p_load_mw) + R"(, "q0": )" + std::to_string(q_load_mvar) + R"(}]})";
}

inline Case two_bus(double p_load_mw = 50.0, double q_load_mvar = 10.0, double r = 0.01, double x = 0.1) {
    return parse_case(two_bus_json(p_load_mw, q_load_mvar, r, x));
}

inline Case case39() { return load_case_file(bundled_case_path().string()); }

inline Case three_bus() { return load_case_file(STOPF_TEST_DIR "/fixtures/three_bus_st.json"); }

// Flat start shaken by a few percent, kept strictly inside the bounds.
inline Eigen::VectorXd random_interior_point(const OpfProblem& p, std::mt19937_64& rng, double spread = 0.03) {
    Eigen::VectorXd x = initial_point(p);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double lo = p.lower[k], hi = p.upper[k];
        if (lo == hi) continue;
        const double scale = std::isfinite(lo) && std::isfinite(hi) ? std::min(hi - lo, 1.0) : 1.0;
        x[k] += spread * scale * u(rng);
        if (std::isfinite(lo) && std::isfinite(hi)) {
            const double m = 1e-3 * (hi - lo);
            x[k] = std::clamp(x[k], lo + m, hi - m);
        }
    }
    return x;
}

}  // namespace stopf::test

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "stopf/st_model.hpp"
#include "support.hpp"

using namespace stopf;
using doctest::Approx;

namespace {

LoadSpec load(double p0, double q0, double alpha = 1.0, double beta = 1.0) {
    LoadSpec l;
    l.bus = 5;
    l.p0 = p0;
    l.q0 = q0;
    l.alpha = alpha;
    l.beta = beta;
    return l;
}

StParams lossless(double limit = 10.0) {
    StParams p;
    p.i_rec_max = limit;
    p.i_inv_max = limit;
    return p;
}

StParams calibrated(const LoadSpec& l) {
    return resolve_st_params(l, StConfig{});
}

}  // namespace

TEST_CASE("eval_load") {
    CHECK(eval_load(load(1.0, 0.0), 1.0).p == 1.0);
    CHECK(eval_load(load(1.3, 0.4), 0.9).p == Approx(0.9 * 1.3).epsilon(1e-15));
    CHECK(eval_load(load(1.3, 0.4), 0.9).q == Approx(0.9 * 0.4).epsilon(1e-15));
    CHECK(eval_load(load(2.0, 0.0, 2.0), 0.95).p == Approx(1.805).epsilon(1e-15));
    CHECK_THROWS_AS(eval_load(load(1, 0), 0.0), StModelError);
    CHECK_THROWS_AS(eval_load(load(1, 0), -1.0), StModelError);
}

TEST_CASE("pcc and inverter currents") {
    auto a = pcc_currents(1.0, 0.0, 1.0);
    CHECK(a.d == 1.0);
    CHECK(a.q == 0.0);
    a = pcc_currents(0.0, 0.0, 0.97);
    CHECK(a.d == 0.0);
    a = pcc_currents(0.9, 0.3, 1.05);
    CHECK(a.d == Approx(0.857142857).epsilon(1e-9));
    CHECK(a.q == Approx(0.285714286).epsilon(1e-8));
    CHECK_THROWS_AS(pcc_currents(1, 0, 0.0), StModelError);

    auto b = inverter_currents(1.0, 0.0, 1.0);
    CHECK(b.d == 1.0);
    b = inverter_currents(0.9, 0.3, 0.9);
    CHECK(b.d == Approx(1.0));
    CHECK(b.q == Approx(-0.333333333).epsilon(1e-8));
    b = inverter_currents(0.0, 0.0, 1.0);
    CHECK(b.d == 0.0);
    CHECK_THROWS_AS(inverter_currents(1, 0, -0.1), StModelError);
}

TEST_CASE("dab_loss") {
    StParams p = lossless();
    CHECK(dab_loss(3.7, p) == 0.0);
    p.v_dch = 2.0;
    p.r_dch = 0.01;
    p.r_dcm = 0.01;
    p.n_dc = 2.0;
    CHECK(dab_loss(1.0, p) == Approx(0.0125).epsilon(1e-14));
    CHECK(dab_loss(0.0, p) == 0.0);
    CHECK(dab_loss(-1.0, p) >= 0.0);
    p.v_dch = 0.0;
    CHECK_THROWS_AS(dab_loss(1.0, p), StModelError);
}

TEST_CASE("power balance residual") {
    const StParams p = lossless();
    StState s;
    s.p_st = 0.7;
    CHECK(st_power_balance_residual(s, p, 0.7) == 0.0);
    s.p_st = 1.1 * 0.7;
    CHECK(st_power_balance_residual(s, p, 0.7) == Approx(0.07).epsilon(1e-12));
}

TEST_CASE("solve_pcc_power") {
    const LoadSpec l = load(1.0, 0.3);
    SUBCASE("lossless, v_s = v0") {
        const StState s = solve_pcc_power(1.02, 0.1, 1.0, l, lossless());
        CHECK(s.p_st == l.p0);
    }
    SUBCASE("calibrated at full load gives the target efficiency") {
        const StParams p = calibrated(l);
        const StState s = solve_pcc_power(1.0, 0.0, 1.0, l, p);
        CHECK(std::abs(s.p_st - l.p0 / 0.965) <= 1e-6 * s.p_st);
        CHECK(std::abs(st_power_balance_residual(s, p, eval_load(l, 1.0).p)) < 1e-10);
    }
    SUBCASE("reactive draw at the current limit leaves no room for active power") {
        const StParams p = calibrated(l);
        const double v_i = 1.0;
        CHECK_THROWS_AS(solve_pcc_power(v_i, p.i_rec_max * v_i, 1.0, l, p), NoSolutionError);
        // Brute-force scan: with q just below the limit no p_st in [0, limit] balances the load.
        const double q = 0.999 * p.i_rec_max * v_i;
        const double cap = std::sqrt(p.i_rec_max * p.i_rec_max - q * q);
        bool any_root = false;
        double prev = 0.0;
        for (int k = 0; k <= 20000; ++k) {
            StState s;
            s.p_st = cap * k / 20000.0;
            s.i_drec = s.p_st / v_i;
            s.i_qrec = q / v_i;
            const auto inv = inverter_currents(l.p0, l.q0, 1.0);
            s.i_dinv = inv.d;
            s.i_qinv = inv.q;
            const double r = st_power_balance_residual(s, p, l.p0);
            if (k > 0 && (r >= 0.0) != (prev >= 0.0)) any_root = true;
            prev = r;
        }
        CHECK_FALSE(any_root);
        CHECK_THROWS_AS(solve_pcc_power(v_i, q, 1.0, l, p), NoSolutionError);
    }
    SUBCASE("fills modulation") {
        const StParams p = calibrated(l);
        const StState s = solve_pcc_power(1.0, 0.1, 0.95, l, p);
        const Modulation m = recover_modulation(s, p, 1.0);
        CHECK(s.m_drec == m.drec);
        CHECK(s.m_qinv == m.qinv);
    }
}

TEST_CASE("recover_modulation") {
    StParams p = lossless();
    StState s;
    s.i_drec = 0.8;
    s.i_qrec = 0.1;
    s.v_s = 0.9;
    s.i_dinv = 0.7;
    s.i_qinv = -0.2;
    Modulation m = recover_modulation(s, p, 1.0);
    CHECK(m.drec == 1.0);
    CHECK(m.qrec == 0.0);
    CHECK(m.dinv == Approx(0.9));
    CHECK(m.qinv == 0.0);

    // Nonzero filter: substitute the converter voltage equations directly.
    p.r_frec = 0.01;
    p.x_frec = 0.05;
    p.r_finv = 0.02;
    p.x_finv = 0.04;
    p.b_finv = 0.03;
    p.v_dch = 2.5;
    p.v_dcm = 2.2;
    const double vi = 1.03;
    m = recover_modulation(s, p, vi);
    // Rectifier: m v_dc / 2 = v - (r + j x) i  in dq.
    CHECK(m.drec * p.v_dch / 2 == Approx(vi - p.r_frec * s.i_drec - p.x_frec * s.i_qrec).epsilon(1e-14));
    CHECK(m.qrec * p.v_dch / 2 == Approx(-p.r_frec * s.i_qrec + p.x_frec * s.i_drec).epsilon(1e-14));
    const double iq = s.i_qinv + p.b_finv * s.i_dinv;
    CHECK(m.dinv * p.v_dcm / 2 == Approx(s.v_s + p.r_finv * s.i_dinv + p.x_finv * iq).epsilon(1e-14));
    CHECK(m.qinv * p.v_dcm / 2 == Approx(p.r_finv * iq - p.x_finv * s.i_dinv).epsilon(1e-14));
    p.shunt_model = ShuntModel::physical;
    const Modulation ph = recover_modulation(s, p, vi);
    const double iq_ph = s.i_qinv + p.b_finv * s.v_s;
    CHECK(ph.qinv * p.v_dcm / 2 == Approx(p.r_finv * iq_ph - p.x_finv * s.i_dinv).epsilon(1e-14));
    CHECK(ph.drec == m.drec);
}

TEST_CASE("check_limits") {
    const LoadSpec l = load(1.0, 0.3);
    const StParams p = calibrated(l);
    StState s = solve_pcc_power(1.0, 0.0, 1.0, l, p);
    CHECK(check_limits(s, p).empty());

    StState lo = s;
    lo.v_s = 0.89;
    auto v = check_limits(lo, p);
    REQUIRE(v.size() == 1);
    CHECK(v[0].quantity == "v_s");
    CHECK(v[0].bound == 0.9);

    StState hot = s;
    hot.i_drec = 1.1 * p.i_rec_max;
    hot.i_qrec = 0.0;
    v = check_limits(hot, p);
    REQUIRE(v.size() == 1);
    CHECK(v[0].quantity == "i_rec");

    StState sat = s;
    sat.m_qinv = -1.2;
    v = check_limits(sat, p);
    REQUIRE(v.size() == 1);
    CHECK(v[0].bound == -1.0);
}

TEST_CASE("calibrate_efficiency") {
    const LoadSpec l = load(1.0, 0.0);
    StParams base = lossless(1.2);
    const std::array<double, 4> equal = {0.25, 0.25, 0.25, 0.25};
    LossResistances r = calibrate_efficiency(l, 1.0, equal, base);
    CHECK(r.r_frec == 0.0);
    CHECK(r.r_dch == 0.0);
    CHECK(r.r_dcm == 0.0);
    CHECK(r.r_finv == 0.0);

    r = calibrate_efficiency(l, 0.965, equal, base);
    StParams p = base;
    p.r_frec = r.r_frec;
    p.r_dch = r.r_dch;
    p.r_dcm = r.r_dcm;
    p.r_finv = r.r_finv;
    StState s = solve_pcc_power(1.0, 0.0, 1.0, l, p);
    CHECK(std::abs(s.p_st - 1.0 / 0.965) < 1e-9);
    // Per-stage shares.
    const double loss = s.p_st - 1.0;
    CHECK(rectifier_loss(s, p) == Approx(0.25 * loss).epsilon(1e-9));
    CHECK(inverter_loss(s, p) == Approx(0.25 * loss).epsilon(1e-9));

    // Doubling the load and recalibrating keeps the full-load efficiency.
    const LoadSpec l2 = load(2.0, 0.0);
    StParams base2 = lossless(2.4);
    r = calibrate_efficiency(l2, 0.965, equal, base2);
    base2.r_frec = r.r_frec;
    base2.r_dch = r.r_dch;
    base2.r_dcm = r.r_dcm;
    base2.r_finv = r.r_finv;
    s = solve_pcc_power(1.0, 0.0, 1.0, l2, base2);
    CHECK(std::abs(2.0 / s.p_st - 0.965) < 1e-9);

    CHECK_THROWS_AS(calibrate_efficiency(l, 0.0, equal, base), StModelError);
    CHECK_THROWS_AS(calibrate_efficiency(l, 0.9, {0.5, 0.5, 0.5, 0.0}, base), StModelError);
    CHECK_THROWS_AS(calibrate_efficiency(l, 0.5, equal, base), StModelError);  // 2 pu draw > 1.2 limit
}

TEST_CASE("size_capacity") {
    auto c = size_capacity(load(3.0, 4.0), 1.1);
    CHECK(c.i_rec_max == Approx(5.5).epsilon(1e-15));
    CHECK(c.i_inv_max == Approx(5.5).epsilon(1e-15));
    CHECK(size_capacity(load(1.0, 0.0), 1.1).i_rec_max == Approx(1.1).epsilon(1e-15));
    CHECK_THROWS_AS(size_capacity(load(0.0, 0.0), 1.1), StModelError);

    const Case k = test::case39();
    for (const auto& ld : k.loads) {
        if (ld.bus != 20) continue;
        const StParams p = resolve_st_params(ld, k.st_defaults);
        CHECK(p.i_rec_max == Approx(1.1 * std::hypot(6.80, 1.03)).epsilon(1e-12));
    }
}

TEST_CASE("resolved parameters satisfy the type invariants") {
    const Case k = test::case39();
    for (const StParams& p : resolve_case_st_params(k)) {
        CHECK(p.r_frec >= 0.0);
        CHECK(p.r_dch >= 0.0);
        CHECK(p.r_dcm >= 0.0);
        CHECK(p.r_finv >= 0.0);
        CHECK(p.v_dch == Approx(p.n_dc * p.v_dcm));
        CHECK(p.i_rec_max > 0.0);
        CHECK(p.v_s_min <= p.v_s_max);
    }
}

TEST_CASE("property: lossless identity") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> vs(0.85, 1.15), q(-0.5, 0.5), vi(0.9, 1.1);
    const LoadSpec l = load(0.8, 0.2, 1.4, 2.1);
    const StParams p = lossless(3.0);
    for (int k = 0; k < 200; ++k) {
        const double v = vs(rng);
        const StState s = solve_pcc_power(vi(rng), q(rng), v, l, p);
        CHECK(std::abs(s.p_st - eval_load(l, v).p) <= 1e-14);
    }
}

TEST_CASE("property: oracle residual over 1000 random draws") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> vs(0.9, 1.1), q(-0.3, 0.3), vi(0.92, 1.08);
    const LoadSpec l = load(1.0, 0.3);
    const StParams p = calibrated(l);
    int feasible = 0, tried = 0;
    while (feasible < 1000 && tried < 10000) {
        ++tried;
        const double v = vs(rng);
        StState s;
        try {
            s = solve_pcc_power(vi(rng), q(rng), v, l, p);
        } catch (const NoSolutionError&) {
            continue;  // overloaded draw
        }
        ++feasible;
        CHECK(std::abs(st_power_balance_residual(s, p, eval_load(l, v).p)) < 1e-10);
        CHECK(s.p_st >= eval_load(l, v).p);
    }
    CHECK(feasible == 1000);
}

TEST_CASE("property: primary draw increases with v_s") {
    const LoadSpec l = load(1.0, 0.3, 1.0);
    const StParams p = calibrated(l);
    double prev = -1.0;
    for (int k = 0; k <= 40; ++k) {
        const double v = 0.9 + 0.005 * k;
        const double ps = solve_pcc_power(1.0, 0.05, v, l, p).p_st;
        CHECK(ps > prev);
        prev = ps;
    }
}

TEST_CASE("property: reactive decoupling") {
    const LoadSpec l = load(1.0, 0.3);
    StParams p = calibrated(l);
    const StState a = solve_pcc_power(1.0, 0.0, 0.95, l, p);
    const StState b = solve_pcc_power(1.0, 0.2, 0.95, l, p);
    CHECK(a.i_dinv == b.i_dinv);
    CHECK(a.i_qinv == b.i_qinv);
    CHECK(b.p_st > a.p_st);
    p.r_frec = 0.0;
    const StState c = solve_pcc_power(1.0, 0.0, 0.95, l, p);
    const StState d = solve_pcc_power(1.0, 0.2, 0.95, l, p);
    CHECK(c.p_st == d.p_st);
}

TEST_CASE("property: zero filter modulation") {
    StParams p = lossless();
    p.v_dch = 2.5;
    p.v_dcm = 2.5;
    StState s;
    s.i_drec = 0.4;
    s.i_qrec = -0.3;
    s.i_dinv = 0.5;
    s.i_qinv = 0.1;
    s.v_s = 0.93;
    const Modulation m = recover_modulation(s, p, 1.04);
    CHECK(m.drec == Approx(2 * 1.04 / 2.5));
    CHECK(m.qrec == 0.0);
    CHECK(m.dinv == Approx(2 * 0.93 / 2.5));
    CHECK(m.qinv == 0.0);
}

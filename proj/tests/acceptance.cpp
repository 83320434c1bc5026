// End-to-end acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fails.
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "stopf/ipm.hpp"
#include "stopf/opf_problem.hpp"
#include "stopf/study.hpp"
#include "support.hpp"

using namespace stopf;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kTol = 1e-6;

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("stopf_acceptance_" + name);
    fs::remove_all(p);
    return p;
}

struct Solved {
    OpfProblem problem;
    Solution solution;
    double seconds = 0.0;
};

Solved timed_solve(const Case& c, const ScenarioConfig& s, const std::vector<StParams>& params = {}) {
    Solved out;
    out.problem = assemble_problem(c, s, params);
    const auto t0 = Clock::now();
    out.solution = solve(out.problem);
    out.seconds = seconds_since(t0);
    return out;
}

// Every optimal solve seen here is re-checked for criterion 6.
struct KktAudit {
    int count = 0;
    double worst_reported = 0.0, worst_recomputed = 0.0, worst_residual = 0.0;
    std::vector<std::string> bad;

    void add(const std::string& tag, const Solved& s) {
        if (s.solution.status != SolveStatus::optimal) return;
        ++count;
        const KktNorms& r = s.solution.kkt;
        const KktNorms k = kkt_residuals(s.problem, s.solution.point, s.solution.multipliers, 0.0);
        const Evaluation e = eval_objective_and_constraints(s.problem, s.solution.point);
        double res = e.equalities.size() ? e.equalities.cwiseAbs().maxCoeff() : 0.0;
        if (e.inequalities.size()) res = std::max(res, std::max(0.0, e.inequalities.maxCoeff()));
        const double rep = std::max({r.stationarity, r.feasibility, r.complementarity});
        const double rec = std::max({k.stationarity, k.feasibility, k.complementarity});
        worst_reported = std::max(worst_reported, rep);
        worst_recomputed = std::max(worst_recomputed, rec);
        worst_residual = std::max(worst_residual, res);
        if (rep > kTol || rec > kTol || res > 1e-8) bad.push_back(tag);
    }
};

}  // namespace

int main() {
    const Case c39 = test::case39();
    const std::vector<StParams> params = resolve_case_st_params(c39);
    KktAudit audit;

    // 1. Snapshot demand reduction.
    const Solved none = timed_solve(c39, ScenarioConfig::without_st(), params);
    const Solved full = timed_solve(c39, ScenarioConfig::all_st(c39), params);
    audit.add("39-bus no-ST", none);
    audit.add("39-bus full-ST", full);
    SnapshotReport rn, rf;
    const bool both_ok = none.solution.status == SolveStatus::optimal && full.solution.status == SolveStatus::optimal;
    if (both_ok) {
        rn = make_report(none.problem, none.solution);
        rf = make_report(full.problem, full.solution);
        double worst_vs = 0.0, worst_ratio = 0.0;
        for (const auto& t : rf.transformers) worst_vs = std::max(worst_vs, std::abs(t.state.v_s - 0.9));
        for (std::size_t b = 0; b < rn.buses.size(); ++b) {
            if (!rf.buses[b].v_s_pu) continue;
            const double ratio = rf.buses[b].p_d_mw / rn.buses[b].p_d_mw;
            worst_ratio = std::max(worst_ratio, std::abs(ratio / 0.9 - 1.0));
        }
        const double tmax = std::max(none.seconds, full.seconds);
        report(1, worst_vs <= 1e-4 && worst_ratio <= 5e-3 && tmax < 10.0 && rf.transformers.size() == 19,
               fmt("max |v_s - 0.9| = %.2e (<= 1e-4), max |P_D/P_D0 / 0.9 - 1| = %.2e (<= 5e-3), "
                   "solve time %.3f s (< 10 s)",
                   worst_vs, worst_ratio, tmax));
    } else {
        report(1, false, "39-bus solve not optimal");
    }

    // 2. Snapshot totals.
    if (both_ok) {
        const double g0 = rn.total_generation_mw, l0 = rn.network_losses_mw;
        const double g1 = rf.total_generation_mw, l1 = rf.network_losses_mw;
        const bool g0_ok = std::abs(g0 / 6195.0 - 1.0) <= 0.03, l0_ok = std::abs(l0 / 46.0 - 1.0) <= 0.15;
        const bool g1_ok = std::abs(g1 / 5574.0 - 1.0) <= 0.03, l1_ok = std::abs(l1 / 40.0 - 1.0) <= 0.15;
        const bool order_ok = g1 < g0 && l1 < l0;
        report(2, g0_ok && l0_ok && g1_ok && l1_ok && order_ok,
               fmt("no-ST gen %.1f MW [%s vs 6195 +-3%%], losses %.2f MW [%s vs 46 +-15%%]; "
                   "full-ST gen %.1f MW [%s vs 5574 +-3%%], losses %.2f MW [%s vs 40 +-15%%] "
                   "(ST internal losses %.1f MW); orderings [%s]",
                   g0, g0_ok ? "ok" : "out", l0, l0_ok ? "ok" : "out", g1, g1_ok ? "ok" : "out", l1,
                   l1_ok ? "ok" : "out", rf.st_losses_mw, order_ok ? "ok" : "violated"));
    } else {
        report(2, false, "39-bus solve not optimal");
    }

    // 3. Penetration sweep with commitment search.
    const DailyProfile profile = load_profile("default");
    const std::vector<int> order = enable_order(c39, OrderPolicy::load_desc);
    SweepOptions so;
    so.commitment = true;
    auto t0 = Clock::now();
    const SweepResult sweep = run_sweep(c39, profile, order, {}, params, so);
    const double sweep_s = seconds_since(t0);
    {
        bool all_ok = true, monotone = true;
        double worst_step = -INFINITY;
        int decommit_hours = 0;
        for (const auto& l : sweep.levels) all_ok = all_ok && l.ok;
        for (std::size_t k = 1; k < sweep.levels.size(); ++k) {
            const double step = sweep.levels[k].daily_cost_eur / sweep.levels[k - 1].daily_cost_eur - 1.0;
            worst_step = std::max(worst_step, step);
            if (step > 2e-3) monotone = false;
        }
        for (const auto& h : sweep.hours)
            if (h.decommitted_count > 0) ++decommit_hours;
        const double first = sweep.levels.front().daily_cost_eur, last = sweep.levels.back().daily_cost_eur;
        report(3, all_ok && last < first && monotone && decommit_hours > 0 && sweep_s < 600.0,
               fmt("all cells solved [%s]; daily cost %.1f -> %.1f EUR [%s]; largest step %+.3e (<= 2e-3) [%s]; "
                   "cells with a decommitment: %d (> 0) [%s]; runtime %.1f s (< 600 s)",
                   all_ok ? "ok" : "no", first, last, last < first ? "ok" : "no", worst_step, monotone ? "ok" : "no",
                   decommit_hours, decommit_hours > 0 ? "ok" : "no", sweep_s));
    }

    // 4. Grid-search oracle on the three-bus fixture.
    {
        const Case c3 = test::three_bus();
        ScenarioConfig s;
        s.st_buses = {3};
        const Solved r = timed_solve(c3, s);
        audit.add("three-bus", r);
        std::ifstream in(STOPF_TEST_DIR "/fixtures/three_bus_oracle.json");
        const auto oracle = nlohmann::json::parse(in);
        const double ref = oracle.at("objective_eur").get<double>();
        const double rel = std::abs(r.solution.objective - ref) / ref;
        report(4, r.solution.status == SolveStatus::optimal && rel <= 1e-3,
               fmt("NLP %.4f EUR vs grid %.4f EUR, rel. diff %.2e (<= 1e-3)", r.solution.objective, ref, rel));
    }

    // 5. Jacobian against central differences.
    {
        const OpfProblem& p = full.problem;
        std::mt19937_64 rng(20240515);
        const double h = 1e-6;
        long entries = 0, bad = 0;
        double worst = 0.0;
        const Eigen::Index me = static_cast<Eigen::Index>(p.equalities.size());
        for (int trial = 0; trial < 100; ++trial) {
            const Eigen::VectorXd x = test::random_interior_point(p, rng);
            const Eigen::MatrixXd J = Eigen::MatrixXd(eval_jacobian(p, x));
            for (Eigen::Index j = 0; j < x.size(); ++j) {
                Eigen::VectorXd xp = x, xm = x;
                xp[j] += h;
                xm[j] -= h;
                const Evaluation a = eval_objective_and_constraints(p, xp), b = eval_objective_and_constraints(p, xm);
                for (Eigen::Index r = 0; r < J.rows(); ++r) {
                    const double fd = r < me ? (a.equalities[r] - b.equalities[r]) / (2 * h)
                                             : (a.inequalities[r - me] - b.inequalities[r - me]) / (2 * h);
                    const double err = std::abs(J(r, j) - fd) / std::max(1.0, std::abs(J(r, j)));
                    worst = std::max(worst, err);
                    if (err > 1e-6) ++bad;
                    ++entries;
                }
            }
        }
        report(5, bad == 0,
               fmt("100 points x %ld entries, %ld outside tolerance, worst |J - FD| / max(1, |J|) = %.2e (<= 1e-6)",
                   entries / 100, bad, worst));
    }

    // 7. Degenerate equivalences (solved before 6 so their optima join the audit).
    std::string detail7;
    bool ok7 = true;
    {
        Case lossless = c39;
        lossless.st_defaults.r_frec = 0.0;
        lossless.st_defaults.r_dch = 0.0;
        lossless.st_defaults.r_dcm = 0.0;
        lossless.st_defaults.r_finv = 0.0;
        ScenarioConfig s = ScenarioConfig::all_st(lossless);
        s.v_s_min = 1.0;
        s.v_s_max = 1.0;
        s.pin_q_st_to_load = true;
        const Solved r = timed_solve(lossless, s, resolve_case_st_params(lossless));
        audit.add("lossless pinned", r);
        const double rel = std::abs(r.solution.objective - none.solution.objective) / none.solution.objective;
        const bool a = r.solution.status == SolveStatus::optimal && rel <= 10 * kTol;
        ok7 = ok7 && a;
        detail7 += fmt("(a) lossless-pinned %.4f vs no-ST %.4f EUR, rel %.1e (<= 1e-5) [%s]; ", r.solution.objective,
                       none.solution.objective, rel, a ? "ok" : "no");
    }
    {
        Case toy = test::two_bus(80.0, 30.0);
        toy.buses[0].v_min = toy.buses[0].v_max = 1.0;
        const Line& l = toy.lines[0];
        const double R = l.z_mag * std::cos(l.z_ang), X = l.z_mag * std::sin(l.z_ang);
        const double P = toy.loads[0].p0, Q = toy.loads[0].q0;
        const double bq = 2 * (P * R + Q * X) - 1.0;
        const double v2sq = (-bq + std::sqrt(bq * bq - 4 * l.z_mag * l.z_mag * (P * P + Q * Q))) / 2;
        const double pg = P + R * (P * P + Q * Q) / v2sq;
        const Solved r = timed_solve(toy, ScenarioConfig::without_st());
        audit.add("dispatch toy", r);
        const double err = std::abs(r.solution.point[r.problem.layout.pg(0)] - pg);
        const bool b = r.solution.status == SolveStatus::optimal && err <= 1e-8;
        ok7 = ok7 && b;
        detail7 += fmt("(b) toy |Pg - Pg*| = %.1e pu (<= 1e-8) [%s]; ", err, b ? "ok" : "no");
    }
    {
        ScenarioConfig s = ScenarioConfig::all_st(c39);
        s.v_s_min = 0.85;
        const Solved r = timed_solve(c39, s, params);
        audit.add("v_s_min 0.85", r);
        const double base = full.solution.objective;
        const bool cc = r.solution.status == SolveStatus::optimal && r.solution.objective <= base + kTol * base;
        ok7 = ok7 && cc;
        detail7 += fmt("(c) v_s_min 0.85: %.4f <= %.4f EUR [%s]", r.solution.objective, base, cc ? "ok" : "no");
    }

    // A few sweep cells, re-solved so their optima can be audited too.
    for (std::size_t level : {std::size_t{0}, std::size_t{10}, order.size()}) {
        for (int hour : {4, 19}) {
            const std::vector<int> buses(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(level));
            audit.add(fmt("sweep level %zu hour %d", level, hour),
                      timed_solve(c39, hour_scenario({}, profile, hour, buses), params));
        }
    }

    // 6. KKT quality.
    {
        std::string bad;
        for (const auto& b : audit.bad) bad += " " + b;
        report(6, audit.bad.empty() && audit.count > 0,
               fmt("%d optimal solves; worst reported KKT %.2e, recomputed %.2e (<= 1e-6); worst constraint "
                   "residual %.2e (<= 1e-8)%s%s",
                   audit.count, audit.worst_reported, audit.worst_recomputed, audit.worst_residual,
                   bad.empty() ? "" : "; failing:", bad.c_str()));
    }
    report(7, ok7, detail7);

    // 8. Determinism of exported tables.
    {
        const fs::path a = scratch("a"), b = scratch("b");
        export_snapshot(rf, a);
        export_sweep(sweep, a);
        const Solved again = timed_solve(c39, ScenarioConfig::all_st(c39), params);
        export_snapshot(make_report(again.problem, again.solution), b);
        export_sweep(run_sweep(c39, profile, order, {}, params, so), b);
        int same = 0, total = 0;
        for (const char* f : {"snapshot.csv", "dispatch.csv", "sweep_levels.csv", "sweep_hours.csv"}) {
            ++total;
            if (slurp(a / f) == slurp(b / f) && !slurp(a / f).empty()) ++same;
        }
        report(8, same == total, fmt("%d of %d CSV files byte-identical across repeated runs", same, total));
    }

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}

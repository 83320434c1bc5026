#include "stopf/study.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "stopf/power_flow.hpp"

namespace stopf {

namespace {

std::string num(double v, int precision = 6) {
    if (!std::isfinite(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    std::string s = buf;
    // Avoid "-0.000000" so equal results print equally.
    if (s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    for (std::string& s : out) {
        const auto a = s.find_first_not_of(" \t");
        const auto b = s.find_last_not_of(" \t");
        s = a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    }
    return out;
}

double parse_number(const std::string& text, const std::string& where) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw InputError(where + ": not a number: '" + text + "'");
    }
}

std::filesystem::path data_dir() {
    if (const char* env = std::getenv("STOPF_DATA_DIR"); env && *env) return env;
    return STOPF_DATA_DIR;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::map<int, double> apparent_by_bus(const Case& c) {
    std::map<int, double> s;
    for (const LoadSpec& l : c.loads) s[l.bus] += std::hypot(l.p0, l.q0);
    return s;
}

bool is_slack_unit(const Case& c, std::size_t g) { return c.generators[g].bus == c.buses[c.slack_position()].id; }

}  // namespace

SnapshotReport make_report(const OpfProblem& problem, const Solution& solution) {
    const VariableLayout& lay = problem.layout;
    const Case& c = problem.network;
    const Eigen::VectorXd& x = solution.point;
    const double base = c.base_mva;
    SnapshotReport r;
    r.solution = solution;
    r.objective_eur = solution.objective;

    for (std::size_t b = 0; b < lay.n_bus; ++b) {
        BusReport br;
        br.bus = c.buses[b].id;
        br.v_pu = x[lay.v(b)];
        br.delta_rad = x[lay.delta(b)];
        for (std::size_t l = 0; l < lay.n_load; ++l) {
            if (c.loads[l].bus != br.bus) continue;
            br.p_d_mw += x[lay.pl(l)] * base;
            br.q_d_mvar += x[lay.ql(l)] * base;
            const int k = lay.load_st[l];
            if (k >= 0) {
                const auto kk = static_cast<std::size_t>(k);
                br.p_st_mw = br.p_st_mw.value_or(0.0) + x[lay.st(kk, StVar::p_st)] * base;
                br.q_st_mvar = br.q_st_mvar.value_or(0.0) + x[lay.st(kk, StVar::q_st)] * base;
                br.v_s_pu = x[lay.st(kk, StVar::v_s)];
            }
        }
        r.buses.push_back(br);
    }

    for (std::size_t g = 0; g < lay.n_gen; ++g) {
        const Generator& gen = c.generators[g];
        GeneratorReport gr;
        gr.gen = static_cast<int>(g) + 1;
        gr.bus = gen.bus;
        gr.p_mw = x[lay.pg(g)] * base;
        gr.q_mvar = x[lay.qg(g)] * base;
        gr.committed = problem.scenario.is_committed(g);
        gr.cost_eur = gr.committed ? gen.cost_a * gr.p_mw * gr.p_mw + gen.cost_b * gr.p_mw + gen.cost_c : 0.0;
        r.total_generation_mw += gr.p_mw;
        r.generators.push_back(gr);
    }

    for (const Line& line : c.lines) {
        const std::size_t i = c.bus_position(line.from), j = c.bus_position(line.to);
        const BranchFlow f = line_flow(x[lay.v(i)], x[lay.delta(i)], x[lay.v(j)], x[lay.delta(j)], line);
        LineReport lr;
        lr.from = line.from;
        lr.to = line.to;
        lr.p_mw = f.p * base;
        lr.q_mvar = f.q * base;
        lr.s_mva = f.s * base;
        lr.s_max_mva = line.s_max * base;
        lr.loss_mw = line_loss(x[lay.v(i)], x[lay.delta(i)], x[lay.v(j)], x[lay.delta(j)], line) * base;
        r.lines.push_back(lr);
    }

    for (std::size_t l = 0; l < lay.n_load; ++l) {
        const double p_l = x[lay.pl(l)] * base;
        r.total_demand_mw += p_l;
        const int k = lay.load_st[l];
        if (k < 0) {
            r.total_withdrawal_mw += p_l;
            continue;
        }
        const auto kk = static_cast<std::size_t>(k);
        StReport sr;
        sr.bus = c.loads[l].bus;
        auto v = [&](StVar var) { return x[lay.st(kk, var)]; };
        sr.state = {v(StVar::p_st),   v(StVar::q_st),   v(StVar::i_drec), v(StVar::i_qrec),
                    v(StVar::i_dinv), v(StVar::i_qinv), v(StVar::m_drec), v(StVar::m_qrec),
                    v(StVar::m_dinv), v(StVar::m_qinv), v(StVar::v_s)};
        sr.p_l_mw = p_l;
        sr.q_l_mvar = x[lay.ql(l)] * base;
        sr.loss_mw = sr.state.p_st * base - p_l;
        r.total_withdrawal_mw += sr.state.p_st * base;
        r.st_losses_mw += sr.loss_mw;
        r.transformers.push_back(sr);
    }
    r.network_losses_mw = r.total_generation_mw - r.total_withdrawal_mw;
    r.total_losses_mw = r.total_generation_mw - r.total_demand_mw;
    return r;
}

SnapshotReport run_snapshot(const Case& c, const ScenarioConfig& scenario, const std::vector<StParams>& st_params,
                            const SolverOptions& options) {
    const OpfProblem problem = assemble_problem(c, scenario, st_params);
    Solution sol = solve(problem, options);
    if (sol.status != SolveStatus::optimal) {
        throw SolveFailure("solver stopped with status " + std::string(to_string(sol.status)) + ": " + sol.message,
                           sol.status);
    }
    return make_report(problem, sol);
}

double penetration(const Case& c, const ScenarioConfig& scenario) {
    double total = 0.0, with_st = 0.0;
    for (const LoadSpec& l : c.loads) {
        const double s = std::hypot(l.p0, l.q0);
        total += s;
        if (scenario.has_st(l.bus)) with_st += s;
    }
    if (total <= 0.0) throw InputError("total nominal demand is zero");
    return with_st / total;
}

OrderPolicy parse_order_policy(std::string_view text) {
    if (text == "load-desc") return OrderPolicy::load_desc;
    if (text == "load-asc") return OrderPolicy::load_asc;
    if (text == "bus-id") return OrderPolicy::bus_id;
    if (text == "explicit") return OrderPolicy::explicit_list;
    throw InputError("unknown order policy '" + std::string(text) + "' (load-desc, load-asc, bus-id, explicit)");
}

std::string_view to_string(OrderPolicy policy) {
    switch (policy) {
        case OrderPolicy::load_desc: return "load-desc";
        case OrderPolicy::load_asc: return "load-asc";
        case OrderPolicy::bus_id: return "bus-id";
        case OrderPolicy::explicit_list: return "explicit";
    }
    return "unknown";
}

std::vector<int> enable_order(const Case& c, OrderPolicy policy, const std::vector<int>& explicit_order) {
    const std::map<int, double> s = apparent_by_bus(c);
    std::vector<int> buses;
    for (const auto& [bus, _] : s) buses.push_back(bus);
    switch (policy) {
        case OrderPolicy::bus_id: break;
        case OrderPolicy::load_desc:
            std::stable_sort(buses.begin(), buses.end(), [&](int a, int b) { return s.at(a) > s.at(b); });
            break;
        case OrderPolicy::load_asc:
            std::stable_sort(buses.begin(), buses.end(), [&](int a, int b) { return s.at(a) < s.at(b); });
            break;
        case OrderPolicy::explicit_list: {
            std::vector<int> sorted = explicit_order;
            std::sort(sorted.begin(), sorted.end());
            if (sorted != buses) throw InputError("explicit order is not a permutation of the load buses");
            return explicit_order;
        }
    }
    return buses;
}

DailyProfile parse_profile_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (split(line, ',').size() == 1 && split(line, ',')[0].empty()) continue;
        rows.push_back(split(line, ','));
    }
    if (rows.empty()) throw InputError("profile: empty file");
    const auto& header = rows.front();
    const bool with_exponents = header == std::vector<std::string>{"hour", "factor", "alpha", "beta"};
    if (!with_exponents && header != std::vector<std::string>{"hour", "factor"}) {
        throw InputError("profile: header must be 'hour,factor' or 'hour,factor,alpha,beta'");
    }
    if (rows.size() != 25) {
        throw InputError("profile: expected 24 data rows, found " + std::to_string(rows.size() - 1));
    }
    DailyProfile p;
    std::array<double, 24> alpha{}, beta{};
    std::array<bool, 24> seen{};
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::string where = "profile row " + std::to_string(r);
        if (row.size() != header.size()) throw InputError(where + ": wrong number of columns");
        const double hour = parse_number(row[0], where);
        if (hour != std::floor(hour) || hour < 1 || hour > 24) throw InputError(where + ": hour must be 1..24");
        const auto h = static_cast<std::size_t>(hour) - 1;
        if (seen[h]) throw InputError(where + ": duplicate hour");
        seen[h] = true;
        p.factor[h] = parse_number(row[1], where);
        if (!(p.factor[h] > 0.0)) throw InputError(where + ": factor must be positive");
        if (with_exponents) {
            alpha[h] = parse_number(row[2], where);
            beta[h] = parse_number(row[3], where);
            if (alpha[h] < 0.0 || beta[h] < 0.0) throw InputError(where + ": exponents must be non-negative");
        }
    }
    if (with_exponents) {
        p.alpha = alpha;
        p.beta = beta;
    }
    return p;
}

std::filesystem::path default_profile_path() { return data_dir() / "profile_default.csv"; }
std::filesystem::path bundled_case_path() { return data_dir() / "case39.json"; }

DailyProfile load_profile(const std::string& path_or_default) {
    const std::filesystem::path path = path_or_default == "default" ? default_profile_path() : std::filesystem::path(path_or_default);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read profile " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_profile_csv(ss.str());
}

CommitmentResult commitment_search(const Case& c, const ScenarioConfig& scenario, const std::vector<StParams>& st_params,
                                   const SolverOptions& options) {
    CommitmentResult out;
    out.committed = scenario.committed.empty() ? std::vector<bool>(c.generators.size(), true) : scenario.committed;
    ScenarioConfig sc = scenario;
    sc.committed = out.committed;
    out.solution = solve(assemble_problem(c, sc, st_params), options);
    if (out.solution.status != SolveStatus::optimal) {
        throw SolveFailure("incumbent solve failed: " + out.solution.message, out.solution.status);
    }
    std::vector<bool> rejected(c.generators.size(), false);
    const VariableLayout lay = assemble_problem(c, sc, st_params).layout;
    for (;;) {
        int pick = -1;
        double best_ratio = -1.0;
        for (std::size_t g = 0; g < c.generators.size(); ++g) {
            const Generator& gen = c.generators[g];
            if (!out.committed[g] || rejected[g] || !gen.committable || is_slack_unit(c, g)) continue;
            if (out.solution.point[lay.pg(g)] > gen.p_min + kCommitmentEpsilon) continue;
            const double ratio = gen.p_max > 0.0 ? gen.cost_c / gen.p_max : gen.cost_c;
            if (ratio > best_ratio) {
                best_ratio = ratio;
                pick = static_cast<int>(g);
            }
        }
        if (pick < 0) break;
        std::vector<bool> trial = out.committed;
        trial[static_cast<std::size_t>(pick)] = false;
        sc.committed = trial;
        Solution s = solve(assemble_problem(c, sc, st_params), options);
        ++out.tentative_solves;
        const double margin = 1e-9 * std::max(1.0, std::abs(out.solution.objective));
        if (s.status == SolveStatus::optimal && s.objective < out.solution.objective - margin) {
            out.committed = trial;
            out.solution = std::move(s);
            std::fill(rejected.begin(), rejected.end(), false);
        } else {
            rejected[static_cast<std::size_t>(pick)] = true;
        }
    }
    return out;
}

ScenarioConfig hour_scenario(const ScenarioConfig& base, const DailyProfile& profile, int hour,
                             const std::vector<int>& st_buses) {
    if (hour < 1 || hour > 24) throw InputError("hour must be 1..24");
    ScenarioConfig sc = base;
    const auto h = static_cast<std::size_t>(hour - 1);
    sc.hour_factor = base.hour_factor * profile.factor[h];
    if (profile.alpha) sc.alpha = (*profile.alpha)[h];
    if (profile.beta) sc.beta = (*profile.beta)[h];
    sc.st_buses = std::set<int>(st_buses.begin(), st_buses.end());
    return sc;
}

SweepResult run_sweep(const Case& c, const DailyProfile& profile, const std::vector<int>& order,
                      const ScenarioConfig& base, const std::vector<StParams>& st_params, const SweepOptions& options) {
    validate_options(options.solver);
    const std::size_t n_levels = order.size() + 1;
    SweepResult result;
    result.levels.resize(n_levels);
    result.hours.resize(n_levels * 24);

    auto run_level = [&](std::size_t level) {
        LevelRecord& lr = result.levels[level];
        lr.level = level;
        lr.st_buses.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(level));
        ScenarioConfig probe = base;
        probe.st_buses = std::set<int>(lr.st_buses.begin(), lr.st_buses.end());
        lr.penetration = penetration(c, probe);
        lr.ok = true;
        std::optional<Eigen::VectorXd> previous;
        for (int hour = 1; hour <= 24; ++hour) {
            HourRecord& hr = result.hours[level * 24 + static_cast<std::size_t>(hour - 1)];
            hr.level = level;
            hr.hour = hour;
            const ScenarioConfig sc = hour_scenario(base, profile, hour, lr.st_buses);
            SolverOptions so = options.solver;
            so.log = nullptr;
            if (options.warm_start) so.warm_start = previous;
            try {
                OpfProblem problem;
                Solution sol;
                if (options.commitment) {
                    CommitmentResult cr = commitment_search(c, sc, st_params, so);
                    ScenarioConfig committed_sc = sc;
                    committed_sc.committed = cr.committed;
                    problem = assemble_problem(c, committed_sc, st_params);
                    sol = std::move(cr.solution);
                } else {
                    problem = assemble_problem(c, sc, st_params);
                    sol = solve(problem, so);
                    if (sol.status != SolveStatus::optimal) throw SolveFailure(sol.message, sol.status);
                }
                const SnapshotReport rep = make_report(problem, sol);
                hr.ok = true;
                hr.cost_eur = sol.objective;
                hr.losses_mw = rep.network_losses_mw;
                hr.st_losses_mw = rep.st_losses_mw;
                hr.iterations = sol.iterations;
                for (const GeneratorReport& g : rep.generators) {
                    hr.dispatch_mw.push_back(g.p_mw);
                    hr.committed.push_back(g.committed);
                    if (!g.committed) ++hr.decommitted_count;
                }
                for (const StReport& s : rep.transformers) {
                    hr.v_s.push_back(s.state.v_s);
                    hr.q_st_mvar.push_back(s.state.q_st * c.base_mva);
                }
                previous = sol.point;
            } catch (const std::exception& e) {
                hr.ok = false;
                hr.message = e.what();
                lr.ok = false;
                lr.message = "hour " + std::to_string(hour) + ": " + e.what();
                return;
            }
            lr.daily_cost_eur += hr.cost_eur;
            lr.daily_losses_mwh += hr.losses_mw;
        }
    };

    const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(n_levels)));
    if (threads == 1) {
        for (std::size_t level = 0; level < n_levels; ++level) run_level(level);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t level = next++; level < n_levels; level = next++) run_level(level);
            });
        }
        for (std::thread& t : pool) t.join();
    }
    return result;
}

void export_snapshot(const SnapshotReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::string s = "bus,v_pu,delta_rad,p_d_mw,q_d_mvar,p_st_mw,q_st_mvar,v_s_pu\n";
    for (const BusReport& b : report.buses) {
        s += std::to_string(b.bus) + "," + num(b.v_pu) + "," + num(b.delta_rad) + "," + num(b.p_d_mw) + "," +
             num(b.q_d_mvar) + "," + (b.p_st_mw ? num(*b.p_st_mw) : "") + "," + (b.q_st_mvar ? num(*b.q_st_mvar) : "") +
             "," + (b.v_s_pu ? num(*b.v_s_pu) : "") + "\n";
    }
    write_file(dir / "snapshot.csv", s);
    std::string d = "gen,bus,p_mw,q_mvar,committed,cost_eur\n";
    for (const GeneratorReport& g : report.generators) {
        d += std::to_string(g.gen) + "," + std::to_string(g.bus) + "," + num(g.p_mw) + "," + num(g.q_mvar) + "," +
             (g.committed ? "1" : "0") + "," + num(g.cost_eur) + "\n";
    }
    write_file(dir / "dispatch.csv", d);
}

void export_sweep(const SweepResult& result, const std::filesystem::path& dir) {
    if (result.levels.empty()) throw InputError("sweep result is empty");
    std::filesystem::create_directories(dir);
    std::string l = "level,penetration,daily_cost_eur,daily_losses_mwh\n";
    for (const LevelRecord& r : result.levels) {
        l += std::to_string(r.level) + "," + num(r.penetration) + "," + (r.ok ? num(r.daily_cost_eur) : "nan") + "," +
             (r.ok ? num(r.daily_losses_mwh) : "nan") + "\n";
    }
    write_file(dir / "sweep_levels.csv", l);
    std::string h = "level,hour,cost_eur,losses_mw,decommitted_count\n";
    for (const HourRecord& r : result.hours) {
        h += std::to_string(r.level) + "," + std::to_string(r.hour) + "," + (r.ok ? num(r.cost_eur) : "nan") + "," +
             (r.ok ? num(r.losses_mw) : "nan") + "," + std::to_string(r.decommitted_count) + "\n";
    }
    write_file(dir / "sweep_hours.csv", h);
}

}  // namespace stopf

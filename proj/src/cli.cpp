#include "stopf/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stopf/study.hpp"

namespace stopf {

namespace {

/// Shortest round-trip-ish text: 1e-6 rather than 1e-06.
std::string g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    std::string s = buf;
    const auto e = s.find('e');
    if (e != std::string::npos) {
        std::size_t digits = e + 1;
        if (s[digits] == '-' || s[digits] == '+') ++digits;
        while (digits + 1 < s.size() && s[digits] == '0') s.erase(digits, 1);
        if (s[e + 1] == '+') s.erase(e + 1, 1);
    }
    return s;
}

std::string fixed(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int fail(std::ostream& err, const char* code, int exit_code, const std::string& message) {
    std::string one_line = message;
    std::replace(one_line.begin(), one_line.end(), '\n', ' ');
    err << "error[" << code << "]: " << one_line << "\n";
    return exit_code;
}

Case load_case(const std::string& path) {
    return load_case_file(path == "case39" ? bundled_case_path().string() : path);
}

void apply_shunt_override(Case& c, const CliInvocation& inv) {
    if (!inv.shunt_model) return;
    const ShuntModel m = parse_shunt_model(*inv.shunt_model);
    c.st_defaults.shunt_model = m;
    for (LoadSpec& l : c.loads) {
        if (l.st) l.st->shunt_model = m;
    }
}

std::vector<int> parse_bus_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw InputError("--st: '" + item + "' is not a bus id");
        }
    }
    if (out.empty()) throw InputError("--st: empty bus list");
    return out;
}

/// Load buses that get a transformer, in ascending order.
std::vector<int> st_selection(const Case& c, const std::string& st) {
    if (st == "none") return {};
    if (st == "all") return enable_order(c, OrderPolicy::bus_id);
    std::vector<int> list = parse_bus_list(st);
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    return list;
}

ScenarioConfig base_scenario(const CliInvocation& inv) {
    ScenarioConfig sc;
    sc.alpha = inv.alpha;
    sc.beta = inv.beta;
    sc.v_s_min = inv.v_s_min;
    sc.v_s_max = inv.v_s_max;
    return sc;
}

SolverOptions solver_options(const CliInvocation& inv, std::ostream* log) {
    SolverOptions o;
    o.tol_kkt = inv.tol_kkt;
    o.max_iter = inv.max_iter;
    o.log = log;
    validate_options(o);
    return o;
}

void print_snapshot_summary(const SnapshotReport& r, std::ostream& out) {
    out << "status: " << to_string(r.solution.status) << "\n";
    out << "iterations: " << r.solution.iterations << "\n";
    out << "objective_eur: " << fixed(r.objective_eur, 2) << "\n";
    out << "generation_mw: " << fixed(r.total_generation_mw, 2) << "\n";
    out << "demand_mw: " << fixed(r.total_demand_mw, 2) << "\n";
    out << "network_losses_mw: " << fixed(r.network_losses_mw, 2) << "\n";
    out << "st_losses_mw: " << fixed(r.st_losses_mw, 2) << "\n";
    out << "kkt: stationarity=" << g(r.solution.kkt.stationarity) << " feasibility=" << g(r.solution.kkt.feasibility)
        << " complementarity=" << g(r.solution.kkt.complementarity) << "\n";
}

SnapshotReport snapshot(const Case& c, const ScenarioConfig& sc, const std::vector<StParams>& params,
                        const SolverOptions& so, bool commitment) {
    if (!commitment) return run_snapshot(c, sc, params, so);
    CommitmentResult cr = commitment_search(c, sc, params, so);
    ScenarioConfig committed = sc;
    committed.committed = cr.committed;
    return make_report(assemble_problem(c, committed, params), cr.solution);
}

int run_solve(const CliInvocation& inv, std::ostream& out, std::ostream* log) {
    Case c = load_case(inv.case_path);
    apply_shunt_override(c, inv);
    ScenarioConfig sc = base_scenario(inv);
    for (int b : st_selection(c, inv.st)) sc.st_buses.insert(b);
    const std::vector<StParams> params = resolve_case_st_params(c);
    const SnapshotReport r = snapshot(c, sc, params, solver_options(inv, log), inv.commitment);
    print_snapshot_summary(r, out);
    export_snapshot(r, inv.out_dir);
    out << "wrote: " << (std::filesystem::path(inv.out_dir) / "snapshot.csv").string() << ", "
        << (std::filesystem::path(inv.out_dir) / "dispatch.csv").string() << "\n";
    return exit_ok;
}

int run_sweep_command(const CliInvocation& inv, std::ostream& out, std::ostream& err, std::ostream* log) {
    Case c = load_case(inv.case_path);
    apply_shunt_override(c, inv);
    const DailyProfile profile = load_profile(inv.profile);
    const std::vector<int> selected = st_selection(c, inv.st);
    const OrderPolicy policy = parse_order_policy(inv.order);
    std::vector<int> order;
    if (policy == OrderPolicy::explicit_list) {
        order = inv.order_list;
        std::vector<int> sorted = order;
        std::sort(sorted.begin(), sorted.end());
        if (sorted != selected) throw InputError("--order-list must be a permutation of the --st buses");
    } else {
        for (int b : enable_order(c, policy)) {
            if (std::binary_search(selected.begin(), selected.end(), b)) order.push_back(b);
        }
    }
    const std::vector<StParams> params = resolve_case_st_params(c);
    SweepOptions so;
    so.solver = solver_options(inv, nullptr);
    so.commitment = inv.commitment;
    so.threads = inv.threads;
    const ScenarioConfig base = base_scenario(inv);
    const SweepResult result = run_sweep(c, profile, order, base, params, so);
    export_sweep(result, inv.out_dir);

    int failed = 0;
    out << "level penetration daily_cost_eur daily_losses_mwh\n";
    for (const LevelRecord& l : result.levels) {
        out << l.level << " " << fixed(l.penetration, 4) << " "
            << (l.ok ? fixed(l.daily_cost_eur, 2) : "failed") << " " << (l.ok ? fixed(l.daily_losses_mwh, 2) : "-")
            << "\n";
        if (!l.ok) {
            ++failed;
            err << "warning: level " << l.level << " failed: " << l.message << "\n";
        }
    }
    int decommitments = 0;
    for (const HourRecord& h : result.hours) decommitments += h.decommitted_count > 0 ? 1 : 0;
    out << "hours_with_decommitment: " << decommitments << "\n";

    // Detail tables for the last level at the peak hour.
    const auto peak = static_cast<int>(std::max_element(profile.factor.begin(), profile.factor.end()) -
                                       profile.factor.begin()) + 1;
    SolverOptions detail = solver_options(inv, log);
    const SnapshotReport r = snapshot(c, hour_scenario(base, profile, peak, order), params, detail, inv.commitment);
    export_snapshot(r, inv.out_dir);
    out << "peak_hour: " << peak << "\n";
    out << "wrote: sweep_levels.csv, sweep_hours.csv, snapshot.csv, dispatch.csv in " << inv.out_dir << "\n";
    if (failed > 0) {
        return fail(err, "E_SOLVER", exit_solver, std::to_string(failed) + " sweep level(s) failed");
    }
    return exit_ok;
}

int run_validate(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
    const std::string path = inv.case_path == "case39" ? bundled_case_path().string() : inv.case_path;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read case file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const Case c = parse_case_unchecked(ss.str());
    const std::vector<Violation> v = validate_case(c);
    if (v.empty()) {
        out << "case ok: " << c.buses.size() << " buses, " << c.lines.size() << " lines, " << c.generators.size()
            << " generators, " << c.loads.size() << " loads\n";
        return exit_ok;
    }
    for (const Violation& x : v) out << "violation: " << x.where << ": " << x.message << "\n";
    return fail(err, "E_VALIDATION", exit_input, std::to_string(v.size()) + " violation(s) in " + path);
}

}  // namespace

std::string print_version_and_config(const CliInvocation& inv) {
    std::ostringstream s;
    s << "stopf " << kVersion << "\n";
    s << "subcommand=" << inv.subcommand << "\n";
    s << "case=" << inv.case_path << "\n";
    s << "st=" << inv.st << "\n";
    s << "profile=" << inv.profile << "\n";
    s << "tol_kkt=" << g(inv.tol_kkt) << "\n";
    s << "max_iter=" << inv.max_iter << "\n";
    s << "v_s_min=" << (inv.v_s_min ? g(*inv.v_s_min) : g(StBuiltins::v_s_min)) << "\n";
    s << "v_s_max=" << (inv.v_s_max ? g(*inv.v_s_max) : g(StBuiltins::v_s_max)) << "\n";
    s << "alpha=" << (inv.alpha ? g(*inv.alpha) : std::string("case")) << "\n";
    s << "beta=" << (inv.beta ? g(*inv.beta) : std::string("case")) << "\n";
    s << "shunt_model=" << inv.shunt_model.value_or("paper") << "\n";
    s << "order=" << inv.order << "\n";
    s << "commitment=" << (inv.commitment ? "on" : "off") << "\n";
    s << "threads=" << inv.threads << "\n";
    s << "out=" << inv.out_dir << "\n";
    s << "log_iterations=" << inv.log_iterations.value_or("none") << "\n";
    return s.str();
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CliInvocation inv;
    CLI::App app{"AC optimal power flow with smart-transformer interfaced loads", "stopf"};
    app.require_subcommand(1, 1);
    bool version = false;
    app.add_flag("--version", version, "Print version and resolved configuration");

    auto add_common = [&inv, &version](CLI::App* sub) {
        sub->add_flag("--version", version, "Print version and resolved configuration");
        sub->add_option("--case", inv.case_path, "Case file path, or 'case39' for the bundled system");
        sub->add_option("--st", inv.st, "Smart transformers: all, none, or comma-separated bus ids");
        sub->add_option("--vsmin", inv.v_s_min, "Secondary voltage lower bound (pu)");
        sub->add_option("--vsmax", inv.v_s_max, "Secondary voltage upper bound (pu)");
        sub->add_option("--alpha", inv.alpha, "Active-power voltage exponent for every load");
        sub->add_option("--beta", inv.beta, "Reactive-power voltage exponent for every load");
        sub->add_option("--shunt-model", inv.shunt_model, "Inverter filter shunt model: paper or physical");
        sub->add_option("--tol", inv.tol_kkt, "KKT tolerance");
        sub->add_option("--max-iter", inv.max_iter, "Iteration limit per solve");
        sub->add_option("--out", inv.out_dir, "Output directory for CSV files");
        sub->add_option("--log-iterations", inv.log_iterations, "Write the solver iteration log to this file");
        sub->add_flag("--commitment", inv.commitment, "Enable the greedy decommitment search");
    };
    CLI::App* solve_cmd = app.add_subcommand("solve", "Single snapshot OPF");
    add_common(solve_cmd);
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "Penetration sweep over the daily profile");
    add_common(sweep_cmd);
    sweep_cmd->add_option("--profile", inv.profile, "Profile CSV path, or 'default'");
    sweep_cmd->add_option("--order", inv.order, "Enable order: load-desc, load-asc, bus-id, explicit");
    sweep_cmd->add_option("--order-list", inv.order_list, "Bus ids for --order explicit")->delimiter(',');
    sweep_cmd->add_option("--threads", inv.threads, "Worker threads for the sweep");
    CLI::App* validate_cmd = app.add_subcommand("validate", "Check a case file");
    validate_cmd->add_option("--case", inv.case_path, "Case file path, or 'case39'");
    validate_cmd->add_flag("--version", version, "Print version and resolved configuration");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        if (version) {
            out << print_version_and_config(inv);
            return exit_ok;
        }
        err << app.help();
        return fail(err, "E_USAGE", exit_input, e.what());
    }
    for (CLI::App* sub : {solve_cmd, sweep_cmd, validate_cmd}) {
        if (sub->parsed()) inv.subcommand = sub->get_name();
    }
    if (version) {
        out << print_version_and_config(inv);
        return exit_ok;
    }

    std::ofstream log_file;
    std::ostream* log = nullptr;
    try {
        if (inv.log_iterations) {
            log_file.open(*inv.log_iterations, std::ios::binary | std::ios::trunc);
            if (!log_file) throw InputError("cannot open iteration log " + *inv.log_iterations);
            log = &log_file;
        }
        if (inv.subcommand == "validate") return run_validate(inv, out, err);
        for (const std::string& line : [&] {
                 std::vector<std::string> lines;
                 std::istringstream s(print_version_and_config(inv));
                 for (std::string l; std::getline(s, l);) lines.push_back(l);
                 return lines;
             }()) {
            out << "# " << line << "\n";
        }
        if (inv.subcommand == "solve") return run_solve(inv, out, log);
        return run_sweep_command(inv, out, err, log);
    } catch (const SolveFailure& e) {
        return fail(err, "E_SOLVER", exit_solver, std::string(to_string(e.status())) + ": " + e.what());
    } catch (const InputError& e) {
        return fail(err, "E_INPUT", exit_input, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(err, "E_INPUT", exit_input, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(err, "E_IO", exit_input, e.what());
    } catch (const std::exception& e) {
        return fail(err, "E_INTERNAL", exit_input, e.what());
    }
}

}  // namespace stopf

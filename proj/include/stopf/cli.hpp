#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace stopf {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { exit_ok = 0, exit_solver = 2, exit_input = 3 };

struct CliInvocation {
    std::string subcommand;  // solve | sweep | validate
    std::string case_path = "case39";
    std::string st = "none";  // all | none | comma-separated bus ids
    std::string profile = "default";
    std::optional<double> v_s_min;
    std::optional<double> v_s_max;
    std::optional<double> alpha;
    std::optional<double> beta;
    std::optional<std::string> shunt_model;
    double tol_kkt = 1e-6;
    int max_iter = 200;
    std::string order = "load-desc";
    std::vector<int> order_list;
    std::string out_dir = "results";
    std::optional<std::string> log_iterations;
    bool commitment = false;
    unsigned threads = 1;
};

/// Resolved options, defaults materialized, one `key=value` per line.
std::string print_version_and_config(const CliInvocation& inv);

/// Full command-line entry point. Never throws; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace stopf

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stopf/ipm.hpp"
#include "stopf/network.hpp"
#include "stopf/opf_problem.hpp"

namespace stopf {

/// A solve ended with a status other than optimal.
class SolveFailure : public std::runtime_error {
  public:
    SolveFailure(const std::string& what, SolveStatus status) : std::runtime_error(what), status_(status) {}
    [[nodiscard]] SolveStatus status() const { return status_; }

  private:
    SolveStatus status_;
};

struct BusReport {
    int bus = 0;
    double v_pu = 0.0;
    double delta_rad = 0.0;
    double p_d_mw = 0.0;   // served load (after the transformer, if any)
    double q_d_mvar = 0.0;
    std::optional<double> p_st_mw;  // draw at the coupling point
    std::optional<double> q_st_mvar;
    std::optional<double> v_s_pu;
};

struct GeneratorReport {
    int gen = 0;  // 1-based
    int bus = 0;
    double p_mw = 0.0;
    double q_mvar = 0.0;
    bool committed = true;
    double cost_eur = 0.0;
};

struct LineReport {
    int from = 0;
    int to = 0;
    double p_mw = 0.0;  // sending end
    double q_mvar = 0.0;
    double s_mva = 0.0;
    double s_max_mva = 0.0;
    double loss_mw = 0.0;
};

struct StReport {
    int bus = 0;
    StState state;
    double p_l_mw = 0.0;
    double q_l_mvar = 0.0;
    double loss_mw = 0.0;
};

struct SnapshotReport {
    std::vector<BusReport> buses;
    std::vector<GeneratorReport> generators;
    std::vector<LineReport> lines;
    std::vector<StReport> transformers;
    double total_generation_mw = 0.0;
    double total_demand_mw = 0.0;     // served load
    double total_withdrawal_mw = 0.0; // what the network delivers: loads plus transformer draws
    double network_losses_mw = 0.0;   // generation - withdrawal = sum of line losses
    double st_losses_mw = 0.0;
    double total_losses_mw = 0.0;     // generation - served load
    double objective_eur = 0.0;
    Solution solution;
};

/// Builds the report rows from a solved point.
SnapshotReport make_report(const OpfProblem& problem, const Solution& solution);

/// One solve; throws SolveFailure unless the status is optimal.
SnapshotReport run_snapshot(const Case& c, const ScenarioConfig& scenario, const std::vector<StParams>& st_params,
                            const SolverOptions& options);

/// Nominal apparent demand behind transformers over total nominal apparent demand.
double penetration(const Case& c, const ScenarioConfig& scenario);

enum class OrderPolicy { load_desc, load_asc, bus_id, explicit_list };

OrderPolicy parse_order_policy(std::string_view text);
std::string_view to_string(OrderPolicy policy);

/// Load buses in enabling order. `explicit_order` is used only by OrderPolicy::explicit_list
/// and must be a permutation of the load buses.
std::vector<int> enable_order(const Case& c, OrderPolicy policy, const std::vector<int>& explicit_order = {});

struct DailyProfile {
    std::array<double, 24> factor{};
    std::optional<std::array<double, 24>> alpha;
    std::optional<std::array<double, 24>> beta;
};

/// CSV with header `hour,factor[,alpha,beta]` and hours 1..24.
DailyProfile parse_profile_csv(std::string_view text);
/// "default" selects the bundled profile.
DailyProfile load_profile(const std::string& path_or_default);
std::filesystem::path default_profile_path();
std::filesystem::path bundled_case_path();

struct CommitmentResult {
    std::vector<bool> committed;
    Solution solution;
    int tentative_solves = 0;
};

/// Threshold for "at its minimum output" in the greedy decommitment, per unit.
inline constexpr double kCommitmentEpsilon = 1e-3;

/// Greedy shutdown of units parked at p_min; a change is kept only when the total cost
/// (fixed cost dropped) strictly decreases. The slack unit is never switched off.
CommitmentResult commitment_search(const Case& c, const ScenarioConfig& scenario, const std::vector<StParams>& st_params,
                                   const SolverOptions& options);

struct SweepOptions {
    SolverOptions solver;
    bool commitment = false;
    unsigned threads = 1;
    bool warm_start = false;  // start each hour from the previous hour's point of the same level
};

struct HourRecord {
    std::size_t level = 0;
    int hour = 0;  // 1..24
    bool ok = false;
    double cost_eur = 0.0;
    double losses_mw = 0.0;  // network losses
    double st_losses_mw = 0.0;
    std::vector<double> dispatch_mw;
    std::vector<bool> committed;
    int decommitted_count = 0;
    std::vector<double> v_s;   // per enabled transformer, in the level's bus order
    std::vector<double> q_st_mvar;
    int iterations = 0;
    std::string message;
};

struct LevelRecord {
    std::size_t level = 0;
    std::vector<int> st_buses;
    double penetration = 0.0;
    bool ok = false;
    double daily_cost_eur = 0.0;
    double daily_losses_mwh = 0.0;
    std::string message;
};

struct SweepResult {
    std::vector<LevelRecord> levels;
    std::vector<HourRecord> hours;  // level-major, hour-minor
};

/// Level k enables the first k buses of `order`; every level solves all 24 hours.
SweepResult run_sweep(const Case& c, const DailyProfile& profile, const std::vector<int>& order,
                      const ScenarioConfig& base, const std::vector<StParams>& st_params, const SweepOptions& options);

/// Scenario for one sweep cell: loads scaled by the hour factor, transformers at `st_buses`.
ScenarioConfig hour_scenario(const ScenarioConfig& base, const DailyProfile& profile, int hour,
                             const std::vector<int>& st_buses);

/// snapshot.csv and dispatch.csv.
void export_snapshot(const SnapshotReport& report, const std::filesystem::path& dir);
/// sweep_levels.csv and sweep_hours.csv; throws InputError on an empty result.
void export_sweep(const SweepResult& result, const std::filesystem::path& dir);

}  // namespace stopf

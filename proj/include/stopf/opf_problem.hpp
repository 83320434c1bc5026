#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "stopf/network.hpp"
#include "stopf/st_model.hpp"

namespace stopf {

/// Raised when a point handed to the evaluation layer is unusable (wrong size, NaN).
class EvaluationError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// The eleven per-transformer decision variables, in block order.
enum class StVar : std::size_t {
    p_st,
    q_st,
    i_drec,
    i_qrec,
    i_dinv,
    i_qinv,
    m_drec,
    m_qrec,
    m_dinv,
    m_qinv,
    v_s,
};
inline constexpr std::size_t kStVarCount = 11;
inline constexpr std::size_t kStEqualityCount = 11;

/// Contiguous blocks: V | delta | Pg | Qg | PL | QL | 11 per transformer.
/// Every load owns a (PL, QL) pair; conventional loads have theirs fixed by bounds.
struct VariableLayout {
    std::size_t n_bus = 0;
    std::size_t n_gen = 0;
    std::size_t n_load = 0;
    std::vector<std::size_t> st_load;  // load index of each transformer slot
    std::vector<int> load_st;          // transformer slot of each load, -1 when conventional

    [[nodiscard]] std::size_t n_st() const { return st_load.size(); }
    [[nodiscard]] std::size_t v(std::size_t bus) const { return bus; }
    [[nodiscard]] std::size_t delta(std::size_t bus) const { return n_bus + bus; }
    [[nodiscard]] std::size_t pg(std::size_t g) const { return 2 * n_bus + g; }
    [[nodiscard]] std::size_t qg(std::size_t g) const { return 2 * n_bus + n_gen + g; }
    [[nodiscard]] std::size_t pl(std::size_t l) const { return 2 * n_bus + 2 * n_gen + l; }
    [[nodiscard]] std::size_t ql(std::size_t l) const { return 2 * n_bus + 2 * n_gen + n_load + l; }
    [[nodiscard]] std::size_t st(std::size_t k, StVar var) const {
        return 2 * n_bus + 2 * n_gen + 2 * n_load + kStVarCount * k + static_cast<std::size_t>(var);
    }
    [[nodiscard]] std::size_t size() const { return 2 * n_bus + 2 * n_gen + 2 * n_load + kStVarCount * n_st(); }
};

/// Which loads sit behind a smart transformer, plus the knobs a study varies per solve.
struct ScenarioConfig {
    std::set<int> st_buses;
    std::optional<double> alpha;  // applies to every load unless a per-bus value exists
    std::optional<double> beta;
    std::map<int, double> alpha_at_bus;
    std::map<int, double> beta_at_bus;
    std::optional<double> v_s_min;
    std::optional<double> v_s_max;
    double hour_factor = 1.0;
    std::vector<bool> committed;  // empty: all units on
    bool pin_q_st_to_load = false;

    static ScenarioConfig without_st() { return {}; }
    static ScenarioConfig all_st(const Case& c);
    [[nodiscard]] bool has_st(int bus) const { return st_buses.contains(bus); }
    [[nodiscard]] bool is_committed(std::size_t g) const { return committed.empty() || committed[g]; }
};

enum class TermKind {
    constant,
    linear,
    square,
    bilinear,
    power_ratio,  // (x0 / par0)^par1
    branch_p,     // sending-end p over (V_a, delta_a, V_b, delta_b); par = (z, theta, b)
    branch_q,
    branch_s2,    // p^2 + q^2 at the sending end
    dab_loss,     // ((x0 - par0 (x1^2 + x2^2)) / par1)^2 * par2
};

struct Term {
    TermKind kind = TermKind::constant;
    double coef = 1.0;
    std::array<int, 4> var{-1, -1, -1, -1};
    std::array<double, 3> par{};
    std::array<int, 4> slot{-1, -1, -1, -1};  // position of var[k] inside the row's pattern
};

struct Row {
    std::string name;
    std::vector<Term> terms;
    std::vector<int> pattern;  // sorted unique columns
};

struct OpfProblem {
    VariableLayout layout;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    std::vector<Row> equalities;
    std::vector<Row> inequalities;  // row value <= 0, normalized by the limit (value/limit^2 - 1)
    Row objective;

    Case network;
    ScenarioConfig scenario;
    std::vector<LoadSpec> effective_loads;  // scaled by the hour factor, exponent overrides applied
    std::vector<StParams> st_params;        // one per transformer slot

    [[nodiscard]] std::size_t num_vars() const { return layout.size(); }
    [[nodiscard]] std::size_t num_constraints() const { return equalities.size() + inequalities.size(); }
    [[nodiscard]] std::string variable_name(std::size_t index) const;
    /// Row indices (equalities first, inequalities after) and column indices of the Jacobian.
    [[nodiscard]] std::vector<std::pair<int, int>> jacobian_pattern() const;
};

struct Evaluation {
    double objective = 0.0;
    Eigen::VectorXd equalities;
    Eigen::VectorXd inequalities;
};

/// Builds the full program. `st_params` holds one entry per case load (see
/// resolve_case_st_params); empty means resolve from the case file.
OpfProblem assemble_problem(const Case& c, const ScenarioConfig& scenario, const std::vector<StParams>& st_params = {});

Evaluation eval_objective_and_constraints(const OpfProblem& problem, const Eigen::VectorXd& x);
Eigen::VectorXd eval_objective_gradient(const OpfProblem& problem, const Eigen::VectorXd& x);

/// Constraint Jacobian, equality rows then inequality rows, with exactly the declared pattern.
Eigen::SparseMatrix<double, Eigen::RowMajor> eval_jacobian(const OpfProblem& problem, const Eigen::VectorXd& x);

/// Dense Hessian of obj_factor * f + y_eq' c_eq + y_ineq' c_ineq.
Eigen::MatrixXd eval_lagrangian_hessian(const OpfProblem& problem, const Eigen::VectorXd& x, double obj_factor,
                                        const Eigen::VectorXd& y_eq, const Eigen::VectorXd& y_ineq);

/// Central-difference Hessian of the same Lagrangian; cross-checking only.
Eigen::MatrixXd finite_difference_hessian(const OpfProblem& problem, const Eigen::VectorXd& x, double obj_factor,
                                          const Eigen::VectorXd& y_eq, const Eigen::VectorXd& y_ineq,
                                          double step = 1e-5);

/// Active/reactive mismatch at every bus: P_g - sum p_ij - P_D (two entries per bus, P then Q).
Eigen::VectorXd nodal_balance_residual(const OpfProblem& problem, const Eigen::VectorXd& x);

}  // namespace stopf

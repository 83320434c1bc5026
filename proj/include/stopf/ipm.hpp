#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stopf/opf_problem.hpp"

namespace stopf {

struct SolverOptions {
    double tol_kkt = 1e-6;
    int max_iter = 200;
    double mu0 = 0.1;
    double mu_factor = 0.2;
    double tau = 0.995;
    double reg_floor = 1e-8;
    int multistart = 0;                 // extra randomly perturbed starts; best optimal result kept
    unsigned multistart_seed = 12345;
    std::optional<Eigen::VectorXd> warm_start;
    std::ostream* log = nullptr;        // one line per iteration when set
};

/// Throws std::invalid_argument when an option is out of range.
void validate_options(const SolverOptions& options);

enum class SolveStatus { optimal, infeasible_detected, iteration_limit, numerical_failure };

std::string_view to_string(SolveStatus status);

struct KktNorms {
    double stationarity = 0.0;
    double feasibility = 0.0;
    double complementarity = 0.0;
};

struct Multipliers {
    Eigen::VectorXd y_eq;         // one per equality row
    Eigen::VectorXd lambda_ineq;  // one per inequality row, >= 0
    Eigen::VectorXd z_lower;      // bound duals, zero where the bound is infinite
    Eigen::VectorXd z_upper;
};

struct IterationRecord {
    int iter = 0;
    double mu = 0.0;
    double alpha_primal = 0.0;
    double alpha_dual = 0.0;
    KktNorms kkt;
    double objective = 0.0;
    double min_slack = 0.0;       // smallest inequality slack or bound distance
    double min_multiplier = 0.0;  // smallest inequality or bound multiplier
    double regularization = 0.0;
};

struct Solution {
    Eigen::VectorXd point;
    Multipliers multipliers;
    double objective = 0.0;
    SolveStatus status = SolveStatus::numerical_failure;
    KktNorms kkt;
    int iterations = 0;
    std::string message;
    std::vector<IterationRecord> trace;
};

/// Flat start: V = 1, delta = 0, generation spread by p_max over the nominal demand,
/// transformer internals from the scalar balance. Every free variable is moved inside
/// its bounds by 1e-4 of the range. Throws InputError on crossed bounds.
Eigen::VectorXd initial_point(const OpfProblem& problem);

/// Factor applied to the objective inside the solver; duals reported in Solution are
/// in objective units, KKT norms are measured on the scaled problem.
double objective_scale(const OpfProblem& problem);

/// Max-norm residuals of the barrier KKT conditions. Inequality slacks are taken as -g(x);
/// mu = 0 gives the plain first-order conditions.
KktNorms kkt_residuals(const OpfProblem& problem, const Eigen::VectorXd& point, const Multipliers& multipliers,
                       double mu);

Solution solve(const OpfProblem& problem, const SolverOptions& options = {});

}  // namespace stopf

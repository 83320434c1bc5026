#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "stopf/network.hpp"

namespace stopf {

/// Domain error inside the transformer model (non-positive voltage and the like).
class StModelError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// The primary draw cannot be balanced inside the rectifier current limit.
class NoSolutionError : public StModelError {
  public:
    using StModelError::StModelError;
};

/// Resolved per-transformer parameters, all on the system per-unit base.
struct StParams {
    int bus = 0;
    double r_frec = 0.0;
    double x_frec = 0.0;
    double r_finv = 0.0;
    double x_finv = 0.0;
    double b_finv = 0.0;
    double r_dch = 0.0;
    double r_dcm = 0.0;
    double n_dc = 1.0;
    double v_dch = 2.0;
    double v_dcm = 2.0;
    double i_rec_max = 1.0;
    double i_inv_max = 1.0;
    double v_s_min = 0.9;
    double v_s_max = 1.1;
    ShuntModel shunt_model = ShuntModel::paper;
};

/// One operating point of a transformer: PCC power, stage currents, modulation, secondary voltage.
struct StState {
    double p_st = 0.0;
    double q_st = 0.0;
    double i_drec = 0.0;
    double i_qrec = 0.0;
    double i_dinv = 0.0;
    double i_qinv = 0.0;
    double m_drec = 0.0;
    double m_qrec = 0.0;
    double m_dinv = 0.0;
    double m_qinv = 0.0;
    double v_s = 1.0;
};

struct LoadPower {
    double p = 0.0;
    double q = 0.0;
};

struct DqCurrent {
    double d = 0.0;
    double q = 0.0;
};

struct Modulation {
    double drec = 0.0;
    double qrec = 0.0;
    double dinv = 0.0;
    double qinv = 0.0;
};

struct LossResistances {
    double r_frec = 0.0;
    double r_dch = 0.0;
    double r_dcm = 0.0;
    double r_finv = 0.0;
};

struct CurrentLimits {
    double i_rec_max = 0.0;
    double i_inv_max = 0.0;
};

struct LimitViolation {
    std::string quantity;
    double value = 0.0;
    double bound = 0.0;
};

/// Built-in fleet values used when neither the load nor `st_defaults` sets a field.
struct StBuiltins {
    static constexpr double efficiency = 0.965;
    static constexpr double capacity_margin = 1.1;
    static constexpr std::array<double, 4> loss_split = {0.25, 0.25, 0.25, 0.25};
    static constexpr double x_frec = 0.05;  // on the transformer rating base
    static constexpr double x_finv = 0.05;  // on the transformer rating base
    static constexpr double b_finv = 0.02;  // on the transformer rating base
    static constexpr double n_dc = 1.0;
    static constexpr double v_dch = 2.5;  // leaves modulation headroom above 1 pu terminal voltage
    static constexpr double v_s_min = 0.9;
    static constexpr double v_s_max = 1.1;
};

/// Voltage-dependent load: p0 (v_s/v0)^alpha, q0 (v_s/v0)^beta.
LoadPower eval_load(const LoadSpec& load, double v_s);

/// Rectifier dq currents drawn from the PCC at voltage v_i.
DqCurrent pcc_currents(double p_st, double q_st, double v_i);

/// Inverter dq currents feeding the load at secondary voltage v_s (q-axis sign is negative).
DqCurrent inverter_currents(double p_l, double q_l, double v_s);

/// I^2 R loss of the dual active bridge for input power p_dab.
double dab_loss(double p_dab, const StParams& params);

double rectifier_loss(const StState& state, const StParams& params);
double inverter_loss(const StState& state, const StParams& params);

/// p_st minus (rectifier loss + DAB loss + load + inverter loss). Zero at a consistent state.
double st_power_balance_residual(const StState& state, const StParams& params, double p_l);

/// Scalar oracle: finds the smallest p_st >= p_l that balances the transformer for the given
/// PCC voltage, PCC reactive power and secondary voltage. Safeguarded Newton with a bisection
/// fallback. Throws NoSolutionError when no balance exists inside the rectifier current limit.
StState solve_pcc_power(double v_i, double q_st, double v_s, const LoadSpec& load, const StParams& params);

/// Modulation indices implied by the stage currents.
Modulation recover_modulation(const StState& state, const StParams& params, double v_i);

std::vector<LimitViolation> check_limits(const StState& state, const StParams& params, double tol = 0.0);

/// Chooses the four loss resistances so that the transformer runs at `target_eff` with the
/// nominal load, v_i = v_s = 1 and zero PCC reactive power. `split` weights the loss between
/// rectifier filter, HVDC side, MVDC side and inverter filter.
LossResistances calibrate_efficiency(const LoadSpec& load, double target_eff, const std::array<double, 4>& split,
                                     const StParams& params);

/// Current limits as `margin` times the nominal apparent power at 1 pu voltage.
CurrentLimits size_capacity(const LoadSpec& load, double margin);

/// Fills every StParams field for `load`: explicit values first, then `fleet`, then
/// built-ins; missing limits are sized, missing resistances calibrated.
StParams resolve_st_params(const LoadSpec& load, const StConfig& fleet);

/// resolve_st_params for every load of the case, in load order.
std::vector<StParams> resolve_case_st_params(const Case& c);

}  // namespace stopf

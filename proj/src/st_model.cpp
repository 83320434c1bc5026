#include "stopf/st_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace stopf {

namespace {

void require_positive(double v, const char* what) {
    if (!(v > 0.0)) throw StModelError(std::string(what) + " must be positive, got " + std::to_string(v));
}

double sq(double x) { return x * x; }

/// Smallest non-negative root of x - k x^2 = rhs, or NaN if none.
double small_root(double k, double rhs) {
    if (k == 0.0) return rhs;
    double disc = 1.0 - 4.0 * k * rhs;
    if (disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
    return 2.0 * rhs / (1.0 + std::sqrt(disc));
}

}  // namespace

LoadPower eval_load(const LoadSpec& load, double v_s) {
    require_positive(v_s, "secondary voltage");
    double ratio = v_s / load.v0;
    return {load.p0 * std::pow(ratio, load.alpha), load.q0 * std::pow(ratio, load.beta)};
}

DqCurrent pcc_currents(double p_st, double q_st, double v_i) {
    require_positive(v_i, "PCC voltage");
    return {p_st / v_i, q_st / v_i};
}

DqCurrent inverter_currents(double p_l, double q_l, double v_s) {
    require_positive(v_s, "secondary voltage");
    return {p_l / v_s, -q_l / v_s};
}

double dab_loss(double p_dab, const StParams& params) {
    require_positive(params.v_dch, "v_dch");
    return sq(p_dab / params.v_dch) * (params.r_dch + params.r_dcm * sq(params.n_dc));
}

double rectifier_loss(const StState& s, const StParams& params) {
    return params.r_frec * (sq(s.i_drec) + sq(s.i_qrec));
}

double inverter_loss(const StState& s, const StParams& params) {
    return params.r_finv * (sq(s.i_dinv) + sq(s.i_qinv));
}

double st_power_balance_residual(const StState& s, const StParams& params, double p_l) {
    double rec = rectifier_loss(s, params);
    double p_dab = s.p_st - rec;
    return s.p_st - (rec + dab_loss(p_dab, params) + p_l + inverter_loss(s, params));
}

StState solve_pcc_power(double v_i, double q_st, double v_s, const LoadSpec& load, const StParams& params) {
    require_positive(v_i, "PCC voltage");
    require_positive(v_s, "secondary voltage");
    require_positive(params.v_dch, "v_dch");

    const LoadPower pl = eval_load(load, v_s);
    StState s;
    s.q_st = q_st;
    s.v_s = v_s;
    const DqCurrent inv = inverter_currents(pl.p, pl.q, v_s);
    s.i_dinv = inv.d;
    s.i_qinv = inv.q;
    const double demand = pl.p + inverter_loss(s, params);

    // residual(p) = p - k_rec (p^2 + q^2) - k_dab (p - k_rec (p^2 + q^2))^2 - demand
    const double k_rec = params.r_frec / sq(v_i);
    const double k_dab = (params.r_dch + params.r_dcm * sq(params.n_dc)) / sq(params.v_dch);
    auto eval = [&](double p, double& slope) {
        double u = p - k_rec * (sq(p) + sq(q_st));
        double du = 1.0 - 2.0 * k_rec * p;
        slope = du * (1.0 - 2.0 * k_dab * u);
        return u - k_dab * sq(u) - demand;
    };

    // The residual increases up to the first stationary point; the smallest root lies left of it.
    double hi = std::numeric_limits<double>::infinity();
    if (k_rec > 0.0) hi = 1.0 / (2.0 * k_rec);
    if (k_dab > 0.0) {
        // p where u(p) reaches 1/(2 k_dab)
        double target = 1.0 / (2.0 * k_dab) + k_rec * sq(q_st);
        double p_u = small_root(k_rec, target);
        if (std::isfinite(p_u)) hi = std::min(hi, p_u);
    }
    const double cap_sq = sq(params.i_rec_max * v_i) - sq(q_st);
    if (cap_sq <= 0.0) {
        throw NoSolutionError("reactive PCC power alone saturates the rectifier current limit");
    }
    hi = std::min(hi, std::sqrt(cap_sq));

    double lo = std::min(demand, hi);
    double slope = 0.0;
    double r_lo = eval(lo, slope);
    double r_hi = eval(hi, slope);
    if (r_hi < 0.0) {
        throw NoSolutionError("no power balance below the rectifier current limit (transformer overload)");
    }

    double p = lo;
    double r = r_lo;
    bool converged = std::abs(r) < 1e-13;
    for (int iter = 0; iter < 100 && !converged; ++iter) {
        r = eval(p, slope);
        if (std::abs(r) < 1e-13) {
            converged = true;
            break;
        }
        if (r < 0.0) lo = p;
        else hi = p;
        double next = (slope > 0.0) ? p - r / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (hi - lo < 1e-15 * std::max(1.0, std::abs(p))) {
            p = next;
            converged = true;
            break;
        }
        p = next;
    }
    if (!converged) throw StModelError("solve_pcc_power: iteration cap (100) exceeded");

    s.p_st = p;
    const DqCurrent rec = pcc_currents(p, q_st, v_i);
    s.i_drec = rec.d;
    s.i_qrec = rec.q;
    const Modulation m = recover_modulation(s, params, v_i);
    s.m_drec = m.drec;
    s.m_qrec = m.qrec;
    s.m_dinv = m.dinv;
    s.m_qinv = m.qinv;
    return s;
}

Modulation recover_modulation(const StState& s, const StParams& params, double v_i) {
    require_positive(params.v_dch, "v_dch");
    require_positive(params.v_dcm, "v_dcm");
    Modulation m;
    m.drec = 2.0 * (v_i - params.r_frec * s.i_drec - params.x_frec * s.i_qrec) / params.v_dch;
    m.qrec = 2.0 * (-params.r_frec * s.i_qrec + params.x_frec * s.i_drec) / params.v_dch;
    const double shunt = params.shunt_model == ShuntModel::paper ? params.b_finv * s.i_dinv : params.b_finv * s.v_s;
    const double iq_eff = s.i_qinv + shunt;
    m.dinv = 2.0 * (s.v_s + params.r_finv * s.i_dinv + params.x_finv * iq_eff) / params.v_dcm;
    m.qinv = 2.0 * (params.r_finv * iq_eff - params.x_finv * s.i_dinv) / params.v_dcm;
    return m;
}

std::vector<LimitViolation> check_limits(const StState& s, const StParams& params, double tol) {
    std::vector<LimitViolation> out;
    if (s.v_s < params.v_s_min - tol) out.push_back({"v_s", s.v_s, params.v_s_min});
    if (s.v_s > params.v_s_max + tol) out.push_back({"v_s", s.v_s, params.v_s_max});
    const double rec_sq = sq(s.i_drec) + sq(s.i_qrec);
    if (rec_sq > sq(params.i_rec_max) + tol) out.push_back({"i_rec", std::sqrt(rec_sq), params.i_rec_max});
    const double inv_sq = sq(s.i_dinv) + sq(s.i_qinv);
    if (inv_sq > sq(params.i_inv_max) + tol) out.push_back({"i_inv", std::sqrt(inv_sq), params.i_inv_max});
    const std::pair<const char*, double> mods[] = {
        {"m_drec", s.m_drec}, {"m_qrec", s.m_qrec}, {"m_dinv", s.m_dinv}, {"m_qinv", s.m_qinv}};
    for (const auto& [name, value] : mods) {
        if (std::abs(value) > 1.0 + tol) out.push_back({name, value, value > 0 ? 1.0 : -1.0});
    }
    return out;
}

LossResistances calibrate_efficiency(const LoadSpec& load, double target_eff, const std::array<double, 4>& split,
                                     const StParams& params) {
    if (!(target_eff > 0.0 && target_eff <= 1.0)) {
        throw StModelError("target efficiency must lie in (0, 1]");
    }
    double total = std::accumulate(split.begin(), split.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-9 || std::any_of(split.begin(), split.end(), [](double w) { return w < 0.0; })) {
        throw StModelError("loss-share weights must be non-negative and sum to 1");
    }
    require_positive(params.v_dch, "v_dch");
    require_positive(params.n_dc, "n_dc");

    const LoadPower pl = eval_load(load, 1.0);
    if (!(pl.p > 0.0)) throw StModelError("cannot calibrate efficiency for a load without active power");

    const double p_st = pl.p / target_eff;
    if (p_st > params.i_rec_max) {
        throw StModelError("efficiency target unreachable: nominal draw exceeds the rectifier current limit");
    }
    if (sq(pl.p) + sq(pl.q) > sq(params.i_inv_max)) {
        throw StModelError("efficiency target unreachable: nominal load exceeds the inverter current limit");
    }

    LossResistances r;
    if (target_eff == 1.0) return r;
    const double loss = p_st - pl.p;
    const double l_rec = split[0] * loss;
    const double l_dch = split[1] * loss;
    const double l_dcm = split[2] * loss;
    const double l_inv = split[3] * loss;

    r.r_finv = l_inv / (sq(pl.p) + sq(pl.q));
    const double p_dab = pl.p + l_inv + l_dch + l_dcm;
    const double i_dc_sq = sq(p_dab / params.v_dch);
    r.r_dch = l_dch / i_dc_sq;
    r.r_dcm = l_dcm / (i_dc_sq * sq(params.n_dc));
    r.r_frec = l_rec / sq(p_st);
    return r;
}

CurrentLimits size_capacity(const LoadSpec& load, double margin) {
    if (!(margin > 0.0)) throw StModelError("capacity margin must be positive");
    const double s = std::hypot(load.p0, load.q0);
    if (!(s > 0.0)) throw StModelError("cannot size a transformer for a zero load");
    return {margin * s, margin * s};
}

StParams resolve_st_params(const LoadSpec& load, const StConfig& fleet) {
    const StConfig cfg = load.st ? fleet.merged_with(*load.st) : fleet;
    StParams p;
    p.bus = load.bus;
    p.shunt_model = cfg.shunt_model.value_or(ShuntModel::paper);
    p.n_dc = cfg.n_dc.value_or(StBuiltins::n_dc);
    p.v_dch = cfg.v_dch.value_or(StBuiltins::v_dch);
    p.v_dcm = cfg.v_dcm.value_or(p.v_dch / p.n_dc);
    p.v_s_min = cfg.v_s_min.value_or(StBuiltins::v_s_min);
    p.v_s_max = cfg.v_s_max.value_or(StBuiltins::v_s_max);

    const double margin = cfg.capacity_margin.value_or(StBuiltins::capacity_margin);
    const CurrentLimits sized = size_capacity(load, margin);
    p.i_rec_max = cfg.i_rec_max.value_or(sized.i_rec_max);
    p.i_inv_max = cfg.i_inv_max.value_or(sized.i_inv_max);

    // Filter values are quoted on the transformer's own rating; the rating is its sized capacity.
    const double rating = sized.i_rec_max;
    p.x_frec = cfg.x_frec.value_or(StBuiltins::x_frec) / rating;
    p.x_finv = cfg.x_finv.value_or(StBuiltins::x_finv) / rating;
    const double b_dev = cfg.b_finv.value_or(StBuiltins::b_finv);
    p.b_finv = p.shunt_model == ShuntModel::paper ? b_dev : b_dev * rating;

    const bool explicit_r = cfg.r_frec || cfg.r_dch || cfg.r_dcm || cfg.r_finv;
    if (explicit_r) {
        p.r_frec = cfg.r_frec.value_or(0.0);
        p.r_dch = cfg.r_dch.value_or(0.0);
        p.r_dcm = cfg.r_dcm.value_or(0.0);
        p.r_finv = cfg.r_finv.value_or(0.0);
    } else {
        const LossResistances r = calibrate_efficiency(
            load, cfg.efficiency.value_or(StBuiltins::efficiency), cfg.loss_split.value_or(StBuiltins::loss_split), p);
        p.r_frec = r.r_frec;
        p.r_dch = r.r_dch;
        p.r_dcm = r.r_dcm;
        p.r_finv = r.r_finv;
    }
    return p;
}

std::vector<StParams> resolve_case_st_params(const Case& c) {
    std::vector<StParams> out;
    out.reserve(c.loads.size());
    for (const LoadSpec& l : c.loads) out.push_back(resolve_st_params(l, c.st_defaults));
    return out;
}

}  // namespace stopf

#include "stopf/opf_problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stopf/jet.hpp"

namespace stopf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
using J4 = Jet<4>;

Term linear(std::size_t var, double coef) {
    Term t;
    t.kind = TermKind::linear;
    t.coef = coef;
    t.var[0] = static_cast<int>(var);
    return t;
}

Term constant(double value) {
    Term t;
    t.kind = TermKind::constant;
    t.coef = value;
    return t;
}

Term square_term(std::size_t var, double coef) {
    Term t;
    t.kind = TermKind::square;
    t.coef = coef;
    t.var[0] = static_cast<int>(var);
    return t;
}

Term bilinear(std::size_t a, std::size_t b, double coef) {
    Term t;
    t.kind = TermKind::bilinear;
    t.coef = coef;
    t.var[0] = static_cast<int>(a);
    t.var[1] = static_cast<int>(b);
    return t;
}

Term power_ratio(std::size_t var, double base, double exponent, double coef) {
    Term t;
    t.kind = TermKind::power_ratio;
    t.coef = coef;
    t.var[0] = static_cast<int>(var);
    t.par = {base, exponent, 0.0};
    return t;
}

Term branch(TermKind kind, const VariableLayout& lay, std::size_t a, std::size_t b, const Line& line, double coef) {
    Term t;
    t.kind = kind;
    t.coef = coef;
    t.var = {static_cast<int>(lay.v(a)), static_cast<int>(lay.delta(a)), static_cast<int>(lay.v(b)),
             static_cast<int>(lay.delta(b))};
    t.par = {line.z_mag, line.z_ang, line.b_shunt};
    return t;
}

std::size_t arity(TermKind kind) {
    switch (kind) {
        case TermKind::constant: return 0;
        case TermKind::linear:
        case TermKind::square:
        case TermKind::power_ratio: return 1;
        case TermKind::bilinear: return 2;
        case TermKind::dab_loss: return 3;
        case TermKind::branch_p:
        case TermKind::branch_q:
        case TermKind::branch_s2: return 4;
    }
    return 0;
}

void finalize_row(Row& row) {
    row.pattern.clear();
    for (const Term& t : row.terms) {
        for (std::size_t k = 0; k < arity(t.kind); ++k) row.pattern.push_back(t.var[k]);
    }
    std::sort(row.pattern.begin(), row.pattern.end());
    row.pattern.erase(std::unique(row.pattern.begin(), row.pattern.end()), row.pattern.end());
    for (Term& t : row.terms) {
        for (std::size_t k = 0; k < arity(t.kind); ++k) {
            auto it = std::lower_bound(row.pattern.begin(), row.pattern.end(), t.var[k]);
            t.slot[k] = static_cast<int>(it - row.pattern.begin());
        }
    }
}

/// Sending-end (p, q) of a PI branch as jets over (V_a, delta_a, V_b, delta_b).
std::pair<J4, J4> branch_jets(const Term& t, const Eigen::VectorXd& x) {
    const J4 va = J4::variable(x[t.var[0]], 0);
    const J4 da = J4::variable(x[t.var[1]], 1);
    const J4 vb = J4::variable(x[t.var[2]], 2);
    const J4 db = J4::variable(x[t.var[3]], 3);
    const double z = t.par[0], th = t.par[1], b = t.par[2];
    const J4 va2 = square(va);
    const J4 vv = va * vb;
    const J4 ang = (da - db) + th;
    const J4 p = (std::cos(th) / z) * va2 - (1.0 / z) * (vv * cos(ang));
    const J4 q = (std::sin(th) / z - b / 2.0) * va2 - (1.0 / z) * (vv * sin(ang));
    return {p, q};
}

/// Value, gradient and Hessian of one term (without its coefficient) over its local slots.
J4 term_jet(const Term& t, const Eigen::VectorXd& x) {
    switch (t.kind) {
        case TermKind::constant: return J4::constant(1.0);
        case TermKind::linear: return J4::variable(x[t.var[0]], 0);
        case TermKind::square: return square(J4::variable(x[t.var[0]], 0));
        case TermKind::bilinear: return J4::variable(x[t.var[0]], 0) * J4::variable(x[t.var[1]], 1);
        case TermKind::power_ratio: return pow((1.0 / t.par[0]) * J4::variable(x[t.var[0]], 0), t.par[1]);
        case TermKind::branch_p: return branch_jets(t, x).first;
        case TermKind::branch_q: return branch_jets(t, x).second;
        case TermKind::branch_s2: {
            auto [p, q] = branch_jets(t, x);
            return square(p) + square(q);
        }
        case TermKind::dab_loss: {
            const J4 p = J4::variable(x[t.var[0]], 0);
            const J4 id = J4::variable(x[t.var[1]], 1);
            const J4 iq = J4::variable(x[t.var[2]], 2);
            const J4 p_dab = p - t.par[0] * (square(id) + square(iq));
            return t.par[2] * square((1.0 / t.par[1]) * p_dab);
        }
    }
    return J4::constant(0.0);
}

/// Value only; cheaper than the jet path and used by the line search.
double term_value(const Term& t, const Eigen::VectorXd& x) {
    switch (t.kind) {
        case TermKind::constant: return 1.0;
        case TermKind::linear: return x[t.var[0]];
        case TermKind::square: return x[t.var[0]] * x[t.var[0]];
        case TermKind::bilinear: return x[t.var[0]] * x[t.var[1]];
        case TermKind::power_ratio: return std::pow(x[t.var[0]] / t.par[0], t.par[1]);
        case TermKind::branch_p:
        case TermKind::branch_q:
        case TermKind::branch_s2: {
            const double va = x[t.var[0]], da = x[t.var[1]], vb = x[t.var[2]], db = x[t.var[3]];
            const double z = t.par[0], th = t.par[1], b = t.par[2];
            const double ang = da - db + th;
            const double p = va * va / z * std::cos(th) - va * vb / z * std::cos(ang);
            const double q = va * va / z * std::sin(th) - va * vb / z * std::sin(ang) - b * va * va / 2.0;
            if (t.kind == TermKind::branch_p) return p;
            if (t.kind == TermKind::branch_q) return q;
            return p * p + q * q;
        }
        case TermKind::dab_loss: {
            const double id = x[t.var[1]], iq = x[t.var[2]];
            const double p_dab = x[t.var[0]] - t.par[0] * (id * id + iq * iq);
            const double i_dc = p_dab / t.par[1];
            return t.par[2] * i_dc * i_dc;
        }
    }
    return 0.0;
}

double row_value(const Row& row, const Eigen::VectorXd& x) {
    double v = 0.0;
    for (const Term& t : row.terms) v += t.coef * term_value(t, x);
    return v;
}

void check_point(const OpfProblem& problem, const Eigen::VectorXd& x) {
    if (static_cast<std::size_t>(x.size()) != problem.num_vars()) {
        throw EvaluationError("point has " + std::to_string(x.size()) + " entries, layout expects " +
                              std::to_string(problem.num_vars()));
    }
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        if (!std::isfinite(x[k])) {
            throw EvaluationError("non-finite value at variable index " + std::to_string(k) + " (" +
                                  problem.variable_name(static_cast<std::size_t>(k)) + ")");
        }
    }
}

void add_row_hessian(const Row& row, const Eigen::VectorXd& x, double weight, Eigen::MatrixXd& h) {
    if (weight == 0.0) return;
    for (const Term& t : row.terms) {
        const std::size_t n = arity(t.kind);
        if (n == 0 || t.kind == TermKind::linear) continue;
        const J4 j = term_jet(t, x);
        const double w = weight * t.coef;
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) h(t.var[a], t.var[b]) += w * j.hess(a, b);
        }
    }
}

}  // namespace

ScenarioConfig ScenarioConfig::all_st(const Case& c) {
    ScenarioConfig s;
    for (const LoadSpec& l : c.loads) s.st_buses.insert(l.bus);
    return s;
}

std::string OpfProblem::variable_name(std::size_t index) const {
    const VariableLayout& lay = layout;
    auto bus_id = [&](std::size_t pos) { return std::to_string(network.buses[pos].id); };
    if (index < lay.delta(0)) return "V[bus " + bus_id(index) + "]";
    if (index < lay.pg(0)) return "delta[bus " + bus_id(index - lay.n_bus) + "]";
    if (index < lay.qg(0)) return "Pg[G" + std::to_string(index - lay.pg(0) + 1) + "]";
    if (index < lay.pl(0)) return "Qg[G" + std::to_string(index - lay.qg(0) + 1) + "]";
    if (index < lay.ql(0)) return "PL[load@" + std::to_string(network.loads[index - lay.pl(0)].bus) + "]";
    if (index < lay.st(0, StVar::p_st)) return "QL[load@" + std::to_string(network.loads[index - lay.ql(0)].bus) + "]";
    static const char* names[kStVarCount] = {"p_st", "q_st", "i_drec", "i_qrec", "i_dinv", "i_qinv",
                                             "m_drec", "m_qrec", "m_dinv", "m_qinv", "v_s"};
    const std::size_t rel = index - lay.st(0, StVar::p_st);
    const std::size_t k = rel / kStVarCount;
    if (k >= lay.n_st()) return "x[" + std::to_string(index) + "]";
    return "ST@" + std::to_string(network.loads[lay.st_load[k]].bus) + "." + names[rel % kStVarCount];
}

std::vector<std::pair<int, int>> OpfProblem::jacobian_pattern() const {
    std::vector<std::pair<int, int>> out;
    int r = 0;
    for (const auto* rows : {&equalities, &inequalities}) {
        for (const Row& row : *rows) {
            for (int col : row.pattern) out.emplace_back(r, col);
            ++r;
        }
    }
    return out;
}

OpfProblem assemble_problem(const Case& c, const ScenarioConfig& scenario, const std::vector<StParams>& st_params_in) {
    if (!(scenario.hour_factor > 0.0)) throw InputError("scenario hour factor must be positive");
    if (!scenario.committed.empty() && scenario.committed.size() != c.generators.size()) {
        throw InputError("scenario commitment vector has the wrong size");
    }
    for (int bus : scenario.st_buses) {
        bool has_load = std::any_of(c.loads.begin(), c.loads.end(), [bus](const LoadSpec& l) { return l.bus == bus; });
        if (!has_load) throw InputError("smart transformer assigned to bus " + std::to_string(bus) + " which has no load");
    }
    std::vector<StParams> resolved;
    const std::vector<StParams>* params = &st_params_in;
    if (st_params_in.empty() && !scenario.st_buses.empty()) {
        resolved.reserve(c.loads.size());
        for (const LoadSpec& l : c.loads) {
            resolved.push_back(scenario.has_st(l.bus) ? resolve_st_params(l, c.st_defaults) : StParams{});
        }
        params = &resolved;
    } else if (!st_params_in.empty() && st_params_in.size() != c.loads.size()) {
        throw InputError("expected one StParams entry per load");
    }

    OpfProblem prob;
    prob.network = c;
    prob.scenario = scenario;
    VariableLayout& lay = prob.layout;
    lay.n_bus = c.buses.size();
    lay.n_gen = c.generators.size();
    lay.n_load = c.loads.size();
    lay.load_st.assign(lay.n_load, -1);
    for (std::size_t l = 0; l < lay.n_load; ++l) {
        LoadSpec eff = c.loads[l];
        eff.p0 *= scenario.hour_factor;
        eff.q0 *= scenario.hour_factor;
        if (scenario.alpha) eff.alpha = *scenario.alpha;
        if (scenario.beta) eff.beta = *scenario.beta;
        if (auto it = scenario.alpha_at_bus.find(eff.bus); it != scenario.alpha_at_bus.end()) eff.alpha = it->second;
        if (auto it = scenario.beta_at_bus.find(eff.bus); it != scenario.beta_at_bus.end()) eff.beta = it->second;
        prob.effective_loads.push_back(eff);
        if (scenario.has_st(eff.bus)) {
            lay.load_st[l] = static_cast<int>(lay.st_load.size());
            lay.st_load.push_back(l);
            StParams p = (*params)[l];
            if (scenario.v_s_min) p.v_s_min = *scenario.v_s_min;
            if (scenario.v_s_max) p.v_s_max = *scenario.v_s_max;
            if (!(p.v_s_min <= p.v_s_max)) throw InputError("secondary voltage bounds crossed at bus " + std::to_string(eff.bus));
            prob.st_params.push_back(p);
        }
    }

    const std::size_t n = lay.size();
    prob.lower = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), -kInf);
    prob.upper = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), kInf);
    auto bound = [&prob](std::size_t idx, double lo, double hi) {
        prob.lower[static_cast<Eigen::Index>(idx)] = lo;
        prob.upper[static_cast<Eigen::Index>(idx)] = hi;
    };

    for (std::size_t b = 0; b < lay.n_bus; ++b) bound(lay.v(b), c.buses[b].v_min, c.buses[b].v_max);
    for (std::size_t g = 0; g < lay.n_gen; ++g) {
        const Generator& gen = c.generators[g];
        if (scenario.is_committed(g)) {
            bound(lay.pg(g), gen.p_min, gen.p_max);
            bound(lay.qg(g), gen.q_min, gen.q_max);
        } else {
            bound(lay.pg(g), 0.0, 0.0);
            bound(lay.qg(g), 0.0, 0.0);
        }
    }
    for (std::size_t l = 0; l < lay.n_load; ++l) {
        if (lay.load_st[l] < 0) {
            const LoadSpec& eff = prob.effective_loads[l];
            const LoadPower nominal = eval_load(eff, eff.v0);
            bound(lay.pl(l), nominal.p, nominal.p);
            bound(lay.ql(l), nominal.q, nominal.q);
        }
    }
    for (std::size_t k = 0; k < lay.n_st(); ++k) {
        const StParams& p = prob.st_params[k];
        for (StVar m : {StVar::m_drec, StVar::m_qrec, StVar::m_dinv, StVar::m_qinv}) bound(lay.st(k, m), -1.0, 1.0);
        bound(lay.st(k, StVar::v_s), p.v_s_min, p.v_s_max);
        if (scenario.pin_q_st_to_load) {
            const LoadSpec& eff = prob.effective_loads[lay.st_load[k]];
            const double q = eval_load(eff, eff.v0).q;
            bound(lay.st(k, StVar::q_st), q, q);
        }
    }

    // Nodal balance, P then Q per bus.
    for (std::size_t b = 0; b < lay.n_bus; ++b) {
        const int id = c.buses[b].id;
        Row rp, rq;
        rp.name = "balance_p[bus " + std::to_string(id) + "]";
        rq.name = "balance_q[bus " + std::to_string(id) + "]";
        for (std::size_t g = 0; g < lay.n_gen; ++g) {
            if (c.generators[g].bus == id) {
                rp.terms.push_back(linear(lay.pg(g), 1.0));
                rq.terms.push_back(linear(lay.qg(g), 1.0));
            }
        }
        for (const IncidentLine& inc : lines_at(c, id)) {
            const Line& line = c.lines[inc.line];
            const std::size_t other = c.bus_position(inc.direction == Direction::outgoing ? line.to : line.from);
            rp.terms.push_back(branch(TermKind::branch_p, lay, b, other, line, -1.0));
            rq.terms.push_back(branch(TermKind::branch_q, lay, b, other, line, -1.0));
        }
        for (std::size_t l = 0; l < lay.n_load; ++l) {
            if (c.loads[l].bus != id) continue;
            const int k = lay.load_st[l];
            if (k >= 0) {
                rp.terms.push_back(linear(lay.st(static_cast<std::size_t>(k), StVar::p_st), -1.0));
                rq.terms.push_back(linear(lay.st(static_cast<std::size_t>(k), StVar::q_st), -1.0));
            } else {
                rp.terms.push_back(linear(lay.pl(l), -1.0));
                rq.terms.push_back(linear(lay.ql(l), -1.0));
            }
        }
        prob.equalities.push_back(std::move(rp));
        prob.equalities.push_back(std::move(rq));
    }
    {
        Row pin;
        pin.name = "slack_angle";
        pin.terms.push_back(linear(lay.delta(c.slack_position()), 1.0));
        prob.equalities.push_back(std::move(pin));
    }

    for (std::size_t k = 0; k < lay.n_st(); ++k) {
        const StParams& p = prob.st_params[k];
        const std::size_t l = lay.st_load[k];
        const LoadSpec& eff = prob.effective_loads[l];
        const std::size_t vi = lay.v(c.bus_position(eff.bus));
        auto v = [&](StVar var) { return lay.st(k, var); };
        const std::string tag = "[ST@" + std::to_string(eff.bus) + "]";
        const std::size_t shunt_var = p.shunt_model == ShuntModel::paper ? v(StVar::i_dinv) : v(StVar::v_s);

        std::vector<Row> rows(kStEqualityCount);
        rows[0].name = "pcc_p" + tag;
        rows[0].terms = {linear(v(StVar::p_st), 1.0), bilinear(v(StVar::i_drec), vi, -1.0)};
        rows[1].name = "pcc_q" + tag;
        rows[1].terms = {linear(v(StVar::q_st), 1.0), bilinear(v(StVar::i_qrec), vi, -1.0)};
        rows[2].name = "rectifier_d" + tag;
        rows[2].terms = {linear(v(StVar::m_drec), p.v_dch / 2.0), linear(vi, -1.0), linear(v(StVar::i_drec), p.r_frec),
                         linear(v(StVar::i_qrec), p.x_frec)};
        rows[3].name = "rectifier_q" + tag;
        rows[3].terms = {linear(v(StVar::m_qrec), p.v_dch / 2.0), linear(v(StVar::i_qrec), p.r_frec),
                         linear(v(StVar::i_drec), -p.x_frec)};
        rows[4].name = "power_balance" + tag;
        {
            Term dab;
            dab.kind = TermKind::dab_loss;
            dab.coef = -1.0;
            dab.var = {static_cast<int>(v(StVar::p_st)), static_cast<int>(v(StVar::i_drec)),
                       static_cast<int>(v(StVar::i_qrec)), -1};
            dab.par = {p.r_frec, p.v_dch, p.r_dch + p.r_dcm * p.n_dc * p.n_dc};
            rows[4].terms = {linear(v(StVar::p_st), 1.0),     square_term(v(StVar::i_drec), -p.r_frec),
                             square_term(v(StVar::i_qrec), -p.r_frec), dab,
                             linear(lay.pl(l), -1.0),         square_term(v(StVar::i_dinv), -p.r_finv),
                             square_term(v(StVar::i_qinv), -p.r_finv)};
        }
        rows[5].name = "load_p" + tag;
        rows[5].terms = {linear(lay.pl(l), 1.0), power_ratio(v(StVar::v_s), eff.v0, eff.alpha, -eff.p0)};
        rows[6].name = "load_q" + tag;
        rows[6].terms = {linear(lay.ql(l), 1.0), power_ratio(v(StVar::v_s), eff.v0, eff.beta, -eff.q0)};
        rows[7].name = "inverter_d" + tag;
        rows[7].terms = {bilinear(v(StVar::i_dinv), v(StVar::v_s), 1.0), linear(lay.pl(l), -1.0)};
        rows[8].name = "inverter_q" + tag;
        rows[8].terms = {bilinear(v(StVar::i_qinv), v(StVar::v_s), 1.0), linear(lay.ql(l), 1.0)};
        rows[9].name = "inverter_md" + tag;
        rows[9].terms = {linear(v(StVar::v_s), 1.0), linear(v(StVar::m_dinv), -p.v_dcm / 2.0),
                         linear(v(StVar::i_dinv), p.r_finv), linear(v(StVar::i_qinv), p.x_finv),
                         linear(shunt_var, p.x_finv * p.b_finv)};
        rows[10].name = "inverter_mq" + tag;
        rows[10].terms = {linear(v(StVar::m_qinv), p.v_dcm / 2.0), linear(v(StVar::i_qinv), -p.r_finv),
                          linear(shunt_var, -p.r_finv * p.b_finv), linear(v(StVar::i_dinv), p.x_finv)};
        for (Row& r : rows) prob.equalities.push_back(std::move(r));
    }

    for (std::size_t li = 0; li < c.lines.size(); ++li) {
        const Line& line = c.lines[li];
        Row r;
        r.name = "line_mva[" + std::to_string(line.from) + "-" + std::to_string(line.to) + "]";
        // Normalized by the rating: s^2 / s_max^2 - 1 <= 0.
        const double w = 1.0 / (line.s_max * line.s_max);
        r.terms = {branch(TermKind::branch_s2, lay, c.bus_position(line.from), c.bus_position(line.to), line, w),
                   constant(-1.0)};
        prob.inequalities.push_back(std::move(r));
    }
    for (std::size_t k = 0; k < lay.n_st(); ++k) {
        const StParams& p = prob.st_params[k];
        const std::string tag = "[ST@" + std::to_string(p.bus) + "]";
        Row rec, inv;
        rec.name = "rectifier_current" + tag;
        const double wr = 1.0 / (p.i_rec_max * p.i_rec_max);
        const double wi = 1.0 / (p.i_inv_max * p.i_inv_max);
        rec.terms = {square_term(lay.st(k, StVar::i_drec), wr), square_term(lay.st(k, StVar::i_qrec), wr),
                     constant(-1.0)};
        inv.name = "inverter_current" + tag;
        inv.terms = {square_term(lay.st(k, StVar::i_dinv), wi), square_term(lay.st(k, StVar::i_qinv), wi),
                     constant(-1.0)};
        prob.inequalities.push_back(std::move(rec));
        prob.inequalities.push_back(std::move(inv));
    }

    prob.objective.name = "generation_cost";
    const double base = c.base_mva;
    for (std::size_t g = 0; g < lay.n_gen; ++g) {
        if (!scenario.is_committed(g)) continue;
        const Generator& gen = c.generators[g];
        prob.objective.terms.push_back(square_term(lay.pg(g), gen.cost_a * base * base));
        prob.objective.terms.push_back(linear(lay.pg(g), gen.cost_b * base));
        prob.objective.terms.push_back(constant(gen.cost_c));
    }

    for (Row& r : prob.equalities) finalize_row(r);
    for (Row& r : prob.inequalities) finalize_row(r);
    finalize_row(prob.objective);
    return prob;
}

Evaluation eval_objective_and_constraints(const OpfProblem& problem, const Eigen::VectorXd& x) {
    check_point(problem, x);
    Evaluation e;
    e.objective = row_value(problem.objective, x);
    e.equalities.resize(static_cast<Eigen::Index>(problem.equalities.size()));
    for (std::size_t r = 0; r < problem.equalities.size(); ++r) {
        e.equalities[static_cast<Eigen::Index>(r)] = row_value(problem.equalities[r], x);
    }
    e.inequalities.resize(static_cast<Eigen::Index>(problem.inequalities.size()));
    for (std::size_t r = 0; r < problem.inequalities.size(); ++r) {
        e.inequalities[static_cast<Eigen::Index>(r)] = row_value(problem.inequalities[r], x);
    }
    return e;
}

Eigen::VectorXd eval_objective_gradient(const OpfProblem& problem, const Eigen::VectorXd& x) {
    check_point(problem, x);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
    for (const Term& t : problem.objective.terms) {
        const std::size_t n = arity(t.kind);
        if (n == 0) continue;
        const J4 j = term_jet(t, x);
        for (std::size_t a = 0; a < n; ++a) g[t.var[a]] += t.coef * j.g[a];
    }
    return g;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> eval_jacobian(const OpfProblem& problem, const Eigen::VectorXd& x) {
    check_point(problem, x);
    const auto rows = static_cast<Eigen::Index>(problem.num_constraints());
    Eigen::SparseMatrix<double, Eigen::RowMajor> jac(rows, x.size());
    Eigen::VectorXi nnz(rows);
    Eigen::Index r = 0;
    for (const auto* set : {&problem.equalities, &problem.inequalities}) {
        for (const Row& row : *set) nnz[r++] = static_cast<int>(row.pattern.size());
    }
    jac.reserve(nnz);
    std::vector<double> vals;
    r = 0;
    for (const auto* set : {&problem.equalities, &problem.inequalities}) {
        for (const Row& row : *set) {
            vals.assign(row.pattern.size(), 0.0);
            for (const Term& t : row.terms) {
                const std::size_t n = arity(t.kind);
                if (n == 0) continue;
                if (t.kind == TermKind::linear) {
                    vals[t.slot[0]] += t.coef;
                    continue;
                }
                const J4 j = term_jet(t, x);
                for (std::size_t a = 0; a < n; ++a) vals[t.slot[a]] += t.coef * j.g[a];
            }
            for (std::size_t k = 0; k < row.pattern.size(); ++k) jac.insert(r, row.pattern[k]) = vals[k];
            ++r;
        }
    }
    jac.makeCompressed();
    return jac;
}

Eigen::MatrixXd eval_lagrangian_hessian(const OpfProblem& problem, const Eigen::VectorXd& x, double obj_factor,
                                        const Eigen::VectorXd& y_eq, const Eigen::VectorXd& y_ineq) {
    check_point(problem, x);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(x.size(), x.size());
    add_row_hessian(problem.objective, x, obj_factor, h);
    for (std::size_t r = 0; r < problem.equalities.size(); ++r) {
        add_row_hessian(problem.equalities[r], x, y_eq[static_cast<Eigen::Index>(r)], h);
    }
    for (std::size_t r = 0; r < problem.inequalities.size(); ++r) {
        add_row_hessian(problem.inequalities[r], x, y_ineq[static_cast<Eigen::Index>(r)], h);
    }
    return h;
}

Eigen::MatrixXd finite_difference_hessian(const OpfProblem& problem, const Eigen::VectorXd& x, double obj_factor,
                                          const Eigen::VectorXd& y_eq, const Eigen::VectorXd& y_ineq, double step) {
    auto lagrangian_gradient = [&](const Eigen::VectorXd& pt) {
        Eigen::VectorXd g = obj_factor * eval_objective_gradient(problem, pt);
        const auto jac = eval_jacobian(problem, pt);
        Eigen::VectorXd y(jac.rows());
        y << y_eq, y_ineq;
        g += jac.transpose() * y;
        return g;
    };
    const Eigen::Index n = x.size();
    Eigen::MatrixXd h(n, n);
    Eigen::VectorXd pt = x;
    for (Eigen::Index k = 0; k < n; ++k) {
        const double keep = pt[k];
        pt[k] = keep + step;
        const Eigen::VectorXd gp = lagrangian_gradient(pt);
        pt[k] = keep - step;
        const Eigen::VectorXd gm = lagrangian_gradient(pt);
        pt[k] = keep;
        h.col(k) = (gp - gm) / (2.0 * step);
    }
    return 0.5 * (h + h.transpose());
}

Eigen::VectorXd nodal_balance_residual(const OpfProblem& problem, const Eigen::VectorXd& x) {
    check_point(problem, x);
    const std::size_t n = 2 * problem.layout.n_bus;
    Eigen::VectorXd r(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) r[static_cast<Eigen::Index>(k)] = row_value(problem.equalities[k], x);
    return r;
}

}  // namespace stopf

#include "stopf/network.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"

namespace stopf {

using nlohmann::json;

std::string_view to_string(BusKind kind) {
    switch (kind) {
        case BusKind::slack: return "slack";
        case BusKind::generator: return "generator";
        case BusKind::load: return "load";
        case BusKind::junction: return "junction";
    }
    return "junction";
}

std::string_view to_string(ShuntModel model) {
    return model == ShuntModel::paper ? "paper" : "physical";
}

ShuntModel parse_shunt_model(std::string_view text) {
    if (text == "paper") return ShuntModel::paper;
    if (text == "physical") return ShuntModel::physical;
    throw InputError("unknown shunt model '" + std::string(text) + "' (expected paper|physical)");
}

StConfig StConfig::merged_with(const StConfig& over) const {
    StConfig out = *this;
    auto take = [](auto& dst, const auto& src) {
        if (src) dst = src;
    };
    take(out.r_frec, over.r_frec);
    take(out.x_frec, over.x_frec);
    take(out.r_finv, over.r_finv);
    take(out.x_finv, over.x_finv);
    take(out.b_finv, over.b_finv);
    take(out.r_dch, over.r_dch);
    take(out.r_dcm, over.r_dcm);
    take(out.n_dc, over.n_dc);
    take(out.v_dch, over.v_dch);
    take(out.v_dcm, over.v_dcm);
    take(out.i_rec_max, over.i_rec_max);
    take(out.i_inv_max, over.i_inv_max);
    take(out.v_s_min, over.v_s_min);
    take(out.v_s_max, over.v_s_max);
    take(out.efficiency, over.efficiency);
    take(out.capacity_margin, over.capacity_margin);
    take(out.loss_split, over.loss_split);
    take(out.shunt_model, over.shunt_model);
    return out;
}

std::optional<std::size_t> Case::find_bus(int id) const {
    for (std::size_t k = 0; k < buses.size(); ++k) {
        if (buses[k].id == id) return k;
    }
    return std::nullopt;
}

std::size_t Case::bus_position(int id) const {
    auto pos = find_bus(id);
    if (!pos) throw InputError("unknown bus id " + std::to_string(id));
    return *pos;
}

std::size_t Case::slack_position() const {
    for (std::size_t k = 0; k < buses.size(); ++k) {
        if (buses[k].kind == BusKind::slack) return k;
    }
    throw InputError("case has no slack bus");
}

namespace {

class Reader {
  public:
    Reader(const json& node, std::string where) : node_(node), where_(std::move(where)) {}

    [[nodiscard]] double number(const char* key) const {
        const json& v = field(key);
        if (!v.is_number()) fail(key, "expected a number");
        double d = v.get<double>();
        if (!std::isfinite(d)) fail(key, "not finite");
        return d;
    }

    [[nodiscard]] double number_or(const char* key, double fallback) const {
        return has(key) ? number(key) : fallback;
    }

    [[nodiscard]] std::optional<double> maybe_number(const char* key) const {
        if (!has(key)) return std::nullopt;
        return number(key);
    }

    [[nodiscard]] int integer(const char* key) const {
        const json& v = field(key);
        if (!v.is_number_integer()) fail(key, "expected an integer");
        return v.get<int>();
    }

    [[nodiscard]] std::string string(const char* key) const {
        const json& v = field(key);
        if (!v.is_string()) fail(key, "expected a string");
        return v.get<std::string>();
    }

    [[nodiscard]] bool boolean_or(const char* key, bool fallback) const {
        if (!has(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_boolean()) fail(key, "expected true/false");
        return v.get<bool>();
    }

    [[nodiscard]] bool has(const char* key) const { return node_.contains(key) && !node_.at(key).is_null(); }

    [[nodiscard]] const json& field(const char* key) const {
        if (!node_.contains(key)) fail(key, "missing required field");
        return node_.at(key);
    }

    [[noreturn]] void fail(const char* key, const std::string& what) const {
        throw InputError(where_ + "." + key + ": " + what);
    }

  private:
    const json& node_;
    std::string where_;
};

const json& array_field(const json& root, const char* key) {
    if (!root.contains(key)) throw InputError(std::string(key) + ": missing required array");
    const json& v = root.at(key);
    if (!v.is_array()) throw InputError(std::string(key) + ": expected an array");
    return v;
}

BusKind parse_kind(const Reader& r) {
    std::string k = r.string("kind");
    if (k == "slack") return BusKind::slack;
    if (k == "generator") return BusKind::generator;
    if (k == "load") return BusKind::load;
    if (k == "junction") return BusKind::junction;
    r.fail("kind", "expected slack|generator|load|junction, got '" + k + "'");
}

StConfig parse_st_config(const json& node, const std::string& where) {
    if (!node.is_object()) throw InputError(where + ": expected an object");
    static const std::set<std::string> known = {
        "r_frec", "x_frec", "r_finv", "x_finv", "b_finv", "r_dch", "r_dcm", "n_dc", "v_dch",
        "v_dcm", "i_rec_max", "i_inv_max", "v_s_min", "v_s_max", "efficiency",
        "capacity_margin", "loss_split", "shunt_model"};
    for (const auto& item : node.items()) {
        if (!known.contains(item.key())) throw InputError(where + "." + item.key() + ": unknown field");
    }
    Reader r(node, where);
    StConfig st;
    st.r_frec = r.maybe_number("r_frec");
    st.x_frec = r.maybe_number("x_frec");
    st.r_finv = r.maybe_number("r_finv");
    st.x_finv = r.maybe_number("x_finv");
    st.b_finv = r.maybe_number("b_finv");
    st.r_dch = r.maybe_number("r_dch");
    st.r_dcm = r.maybe_number("r_dcm");
    st.n_dc = r.maybe_number("n_dc");
    st.v_dch = r.maybe_number("v_dch");
    st.v_dcm = r.maybe_number("v_dcm");
    st.i_rec_max = r.maybe_number("i_rec_max");
    st.i_inv_max = r.maybe_number("i_inv_max");
    st.v_s_min = r.maybe_number("v_s_min");
    st.v_s_max = r.maybe_number("v_s_max");
    st.efficiency = r.maybe_number("efficiency");
    st.capacity_margin = r.maybe_number("capacity_margin");
    if (r.has("loss_split")) {
        const json& s = node.at("loss_split");
        if (!s.is_array() || s.size() != 4) r.fail("loss_split", "expected an array of 4 numbers");
        std::array<double, 4> w{};
        for (std::size_t k = 0; k < 4; ++k) {
            if (!s[k].is_number()) r.fail("loss_split", "expected an array of 4 numbers");
            w[k] = s[k].get<double>();
        }
        st.loss_split = w;
    }
    if (r.has("shunt_model")) {
        try {
            st.shunt_model = parse_shunt_model(r.string("shunt_model"));
        } catch (const InputError& e) {
            r.fail("shunt_model", e.what());
        }
    }
    return st;
}

json st_config_to_json(const StConfig& st) {
    json j = json::object();
    auto put = [&j](const char* key, const std::optional<double>& v) {
        if (v) j[key] = *v;
    };
    put("r_frec", st.r_frec);
    put("x_frec", st.x_frec);
    put("r_finv", st.r_finv);
    put("x_finv", st.x_finv);
    put("b_finv", st.b_finv);
    put("r_dch", st.r_dch);
    put("r_dcm", st.r_dcm);
    put("n_dc", st.n_dc);
    put("v_dch", st.v_dch);
    put("v_dcm", st.v_dcm);
    put("i_rec_max", st.i_rec_max);
    put("i_inv_max", st.i_inv_max);
    put("v_s_min", st.v_s_min);
    put("v_s_max", st.v_s_max);
    put("efficiency", st.efficiency);
    put("capacity_margin", st.capacity_margin);
    if (st.loss_split) j["loss_split"] = *st.loss_split;
    if (st.shunt_model) j["shunt_model"] = std::string(to_string(*st.shunt_model));
    return j;
}

}  // namespace

Case parse_case_unchecked(std::string_view text) {
    json root;
    try {
        root = json::parse(text.begin(), text.end(), nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("case file is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw InputError("case file: top level must be an object");

    Case c;
    Reader top(root, "case");
    c.base_mva = top.number("base_mva");
    if (!(c.base_mva > 0.0)) top.fail("base_mva", "must be positive");
    const double base = c.base_mva;
    if (root.contains("name") && root.at("name").is_string()) c.name = root.at("name").get<std::string>();
    if (root.contains("notes") && root.at("notes").is_array()) {
        for (const auto& n : root.at("notes")) {
            if (n.is_string()) c.notes.push_back(n.get<std::string>());
        }
    }

    const json& buses = array_field(root, "buses");
    for (std::size_t k = 0; k < buses.size(); ++k) {
        Reader r(buses[k], "buses[" + std::to_string(k) + "]");
        Bus b;
        b.id = r.integer("id");
        b.kind = parse_kind(r);
        b.v_min = r.number_or("v_min", 0.9);
        b.v_max = r.number_or("v_max", 1.1);
        c.buses.push_back(b);
    }

    const json& lines = array_field(root, "lines");
    for (std::size_t k = 0; k < lines.size(); ++k) {
        Reader r(lines[k], "lines[" + std::to_string(k) + "]");
        Line l;
        l.from = r.integer("from");
        l.to = r.integer("to");
        l.z_mag = r.number("z_mag");
        l.z_ang = r.number("z_ang");
        l.b_shunt = r.number_or("b_shunt", 0.0);
        l.s_max = r.number("s_max") / base;
        c.lines.push_back(l);
    }

    const json& gens = array_field(root, "generators");
    for (std::size_t k = 0; k < gens.size(); ++k) {
        Reader r(gens[k], "generators[" + std::to_string(k) + "]");
        Generator g;
        g.bus = r.integer("bus");
        g.p_min = r.number("p_min") / base;
        g.p_max = r.number("p_max") / base;
        g.q_min = r.number("q_min") / base;
        g.q_max = r.number("q_max") / base;
        g.cost_a = r.number("cost_a");
        g.cost_b = r.number("cost_b");
        g.cost_c = r.number("cost_c");
        g.committable = r.boolean_or("committable", true);
        c.generators.push_back(g);
    }

    const json& loads = array_field(root, "loads");
    for (std::size_t k = 0; k < loads.size(); ++k) {
        std::string where = "loads[" + std::to_string(k) + "]";
        Reader r(loads[k], where);
        LoadSpec l;
        l.bus = r.integer("bus");
        l.p0 = r.number("p0") / base;
        l.q0 = r.number("q0") / base;
        l.v0 = r.number_or("v0", 1.0);
        l.alpha = r.number_or("alpha", 1.0);
        l.beta = r.number_or("beta", 1.0);
        if (r.has("st")) l.st = parse_st_config(loads[k].at("st"), where + ".st");
        c.loads.push_back(l);
    }

    if (root.contains("st_defaults")) c.st_defaults = parse_st_config(root.at("st_defaults"), "st_defaults");
    return c;
}

Case parse_case(std::string_view text) {
    Case c = parse_case_unchecked(text);
    auto violations = validate_case(c);
    if (!violations.empty()) {
        const auto& v = violations.front();
        std::string msg = v.where + ": " + v.message;
        if (violations.size() > 1) msg += " (+" + std::to_string(violations.size() - 1) + " more)";
        throw InputError(msg);
    }
    return c;
}

Case load_case_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open case file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_case(ss.str());
}

std::vector<Violation> validate_case(const Case& c) {
    std::vector<Violation> out;
    auto add = [&out](std::string where, std::string msg) { out.push_back({std::move(where), std::move(msg)}); };

    if (!(c.base_mva > 0.0)) add("base_mva", "must be positive");

    std::set<int> ids;
    int slack_count = 0;
    for (std::size_t k = 0; k < c.buses.size(); ++k) {
        const Bus& b = c.buses[k];
        std::string where = "buses[" + std::to_string(k) + "] (bus " + std::to_string(b.id) + ")";
        if (!ids.insert(b.id).second) add(where, "duplicate bus id " + std::to_string(b.id));
        if (!(b.v_min <= b.v_max)) add(where, "v_min > v_max");
        if (!(b.v_min > 0.0)) add(where, "v_min must be positive");
        if (b.kind == BusKind::slack) ++slack_count;
    }
    if (slack_count != 1) add("buses", "expected exactly one slack bus, found " + std::to_string(slack_count));

    auto check_ref = [&](const std::string& where, int bus) {
        if (!ids.contains(bus)) add(where, "references unknown bus " + std::to_string(bus));
    };

    for (std::size_t k = 0; k < c.lines.size(); ++k) {
        const Line& l = c.lines[k];
        std::string where = "lines[" + std::to_string(k) + "] (" + std::to_string(l.from) + "-" +
                            std::to_string(l.to) + ")";
        check_ref(where, l.from);
        check_ref(where, l.to);
        if (l.from == l.to) add(where, "from == to");
        if (!(l.z_mag > 0.0)) add(where, "z_mag must be positive");
        if (!(l.z_ang >= 0.0 && l.z_ang <= std::numbers::pi / 2 + 1e-12)) add(where, "z_ang outside [0, pi/2]");
        if (!(l.s_max > 0.0)) add(where, "s_max must be positive");
    }

    for (std::size_t k = 0; k < c.generators.size(); ++k) {
        const Generator& g = c.generators[k];
        std::string where = "generators[" + std::to_string(k) + "] (G" + std::to_string(k + 1) + ")";
        check_ref(where, g.bus);
        if (!(g.p_min <= g.p_max)) add(where, "p_min > p_max");
        if (!(g.q_min <= g.q_max)) add(where, "q_min > q_max");
        if (!(g.cost_a >= 0.0)) add(where, "cost_a must be non-negative");
    }

    for (std::size_t k = 0; k < c.loads.size(); ++k) {
        const LoadSpec& l = c.loads[k];
        std::string where = "loads[" + std::to_string(k) + "] (bus " + std::to_string(l.bus) + ")";
        check_ref(where, l.bus);
        if (!(l.p0 >= 0.0)) add(where, "p0 must be non-negative");
        if (!(l.v0 > 0.0)) add(where, "v0 must be positive");
        if (!(l.alpha >= 0.0) || !(l.beta >= 0.0)) add(where, "alpha and beta must be non-negative");
    }
    return out;
}

std::string serialize_case(const Case& c) {
    const double base = c.base_mva;
    json root = json::object();
    if (!c.name.empty()) root["name"] = c.name;
    if (!c.notes.empty()) root["notes"] = c.notes;
    root["base_mva"] = base;
    json buses = json::array();
    for (const Bus& b : c.buses) {
        buses.push_back({{"id", b.id}, {"kind", std::string(to_string(b.kind))}, {"v_min", b.v_min}, {"v_max", b.v_max}});
    }
    root["buses"] = buses;
    json lines = json::array();
    for (const Line& l : c.lines) {
        lines.push_back({{"from", l.from}, {"to", l.to}, {"z_mag", l.z_mag}, {"z_ang", l.z_ang},
                         {"b_shunt", l.b_shunt}, {"s_max", l.s_max * base}});
    }
    root["lines"] = lines;
    json gens = json::array();
    for (const Generator& g : c.generators) {
        gens.push_back({{"bus", g.bus}, {"p_min", g.p_min * base}, {"p_max", g.p_max * base},
                        {"q_min", g.q_min * base}, {"q_max", g.q_max * base}, {"cost_a", g.cost_a},
                        {"cost_b", g.cost_b}, {"cost_c", g.cost_c}, {"committable", g.committable}});
    }
    root["generators"] = gens;
    json loads = json::array();
    for (const LoadSpec& l : c.loads) {
        json j = {{"bus", l.bus}, {"p0", l.p0 * base}, {"q0", l.q0 * base}, {"v0", l.v0},
                  {"alpha", l.alpha}, {"beta", l.beta}};
        if (l.st) j["st"] = st_config_to_json(*l.st);
        loads.push_back(j);
    }
    root["loads"] = loads;
    root["st_defaults"] = st_config_to_json(c.st_defaults);
    return root.dump(2) + "\n";
}

std::vector<IncidentLine> lines_at(const Case& c, int bus) {
    if (!c.find_bus(bus)) throw InputError("lines_at: unknown bus id " + std::to_string(bus));
    std::vector<IncidentLine> out;
    for (std::size_t k = 0; k < c.lines.size(); ++k) {
        if (c.lines[k].from == bus) out.push_back({k, Direction::outgoing});
        else if (c.lines[k].to == bus) out.push_back({k, Direction::incoming});
    }
    return out;
}

}  // namespace stopf

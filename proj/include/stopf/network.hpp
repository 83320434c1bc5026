#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stopf {

/// Raised for malformed or inconsistent input data (case files, profiles, scenarios).
class InputError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class BusKind { slack, generator, load, junction };

std::string_view to_string(BusKind kind);

struct Bus {
    int id = 0;
    BusKind kind = BusKind::junction;
    double v_min = 0.9;
    double v_max = 1.1;
};

/// PI-model line. Impedance in polar form; b_shunt is the total charging susceptance.
struct Line {
    int from = 0;
    int to = 0;
    double z_mag = 0.0;
    double z_ang = 0.0;
    double b_shunt = 0.0;
    double s_max = 0.0;
};

/// Power bounds are per-unit; cost coefficients stay in MW units (cost_a in EUR/MW^2h).
struct Generator {
    int bus = 0;
    double p_min = 0.0;
    double p_max = 0.0;
    double q_min = 0.0;
    double q_max = 0.0;
    double cost_a = 0.0;
    double cost_b = 0.0;
    double cost_c = 0.0;
    bool committable = true;
};

enum class ShuntModel { paper, physical };

std::string_view to_string(ShuntModel model);
ShuntModel parse_shunt_model(std::string_view text);

/// Smart-transformer block as written in a case file. Every field is optional; unset
/// fields fall back to the fleet defaults (`Case::st_defaults`) and then to built-in values.
///
/// Resistances and current limits are system per-unit. Filter reactances and the filter
/// susceptance are on the transformer's own rating base and get converted during resolution.
struct StConfig {
    std::optional<double> r_frec, x_frec, r_finv, x_finv, b_finv;
    std::optional<double> r_dch, r_dcm, n_dc, v_dch, v_dcm;
    std::optional<double> i_rec_max, i_inv_max, v_s_min, v_s_max;
    std::optional<double> efficiency;
    std::optional<double> capacity_margin;
    std::optional<std::array<double, 4>> loss_split;
    std::optional<ShuntModel> shunt_model;

    /// Fields set in `over` win; the rest come from `*this`.
    [[nodiscard]] StConfig merged_with(const StConfig& over) const;
    bool operator==(const StConfig&) const = default;
};

/// Load as seen at nominal supply voltage v0; p0/q0 per-unit.
struct LoadSpec {
    int bus = 0;
    double p0 = 0.0;
    double q0 = 0.0;
    double v0 = 1.0;
    double alpha = 1.0;
    double beta = 1.0;
    std::optional<StConfig> st;
};

struct Case {
    std::string name;
    std::vector<std::string> notes;
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<Generator> generators;
    std::vector<LoadSpec> loads;
    StConfig st_defaults;

    /// Position of bus `id` in `buses`, if present.
    [[nodiscard]] std::optional<std::size_t> find_bus(int id) const;
    /// Position of bus `id`; throws InputError when absent.
    [[nodiscard]] std::size_t bus_position(int id) const;
    [[nodiscard]] std::size_t slack_position() const;
};

struct Violation {
    std::string where;
    std::string message;
};

/// Schema-level parse only: throws InputError on malformed JSON, missing or mistyped
/// fields. Semantic problems (crossed bounds, dangling ids) are left for validate_case.
Case parse_case_unchecked(std::string_view text);

/// Parses and validates; throws InputError naming the first violation.
Case parse_case(std::string_view text);

Case load_case_file(const std::string& path);

/// Ordered list of invariant violations; empty means the case is usable.
std::vector<Violation> validate_case(const Case& c);

/// Inverse of parse_case: MW/MVAr in the output, per-unit in memory.
std::string serialize_case(const Case& c);

enum class Direction { outgoing, incoming };

struct IncidentLine {
    std::size_t line = 0;
    Direction direction = Direction::outgoing;
};

/// Lines touching `bus`, in line-table order. Outgoing means the bus is the `from` end.
std::vector<IncidentLine> lines_at(const Case& c, int bus);

}  // namespace stopf

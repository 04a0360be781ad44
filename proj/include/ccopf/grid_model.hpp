#ifndef CCOPF_GRID_MODEL_HPP
#define CCOPF_GRID_MODEL_HPP

#include <complex>
#include <string>
#include <vector>

namespace ccopf {

using cplx = std::complex<double>;

enum class GridKind { AC, DC };

// Converter stations are expanded into ordinary buses and branches on load.
// The role tags let serialisation drop them again.
enum class BusRole { Regular, ConverterFilter, ConverterTerminal };
enum class BranchRole { Line, ConverterTransformer, ConverterReactor };

struct Bus {
    int id = 0; // 1-based, contiguous within the grid
    double p_load = 0.0;
    double q_load = 0.0;
    double v_min = 0.9;
    double v_max = 1.1;
    double g_shunt = 0.0;
    double b_shunt = 0.0;
    BusRole role = BusRole::Regular;
};

struct Branch {
    int from = 0;
    int to = 0;
    double r = 0.0, x = 0.0;
    double b = 0.0;       // total line charging, split half to each end
    double p_limit = 0.0; // 0 means unlimited
    double s_limit = 0.0; // 0 means unlimited
    bool is_transformer = false;
    BranchRole role = BranchRole::Line;

    cplx y() const { return 1.0 / cplx(r, x); } // series admittance
    cplx y_sh() const { return {0.0, 0.5 * b}; }  // shunt admittance per end
};

struct Generator {
    int bus = 0;
    double p_min = 0.0, p_max = 0.0;
    double q_min = 0.0, q_max = 0.0;
    // cost = c2 P^2 + c1 P + c0 with P in p.u. (converted on load)
    double c2 = 0.0, c1 = 0.0, c0 = 0.0;
    // as written in the case file: $/MW^2h, $/MWh, $/h
    double cost_mw[3] = {0.0, 0.0, 0.0};
    double participation = 0.0;
};

struct Grid {
    int id = 0;
    GridKind kind = GridKind::AC;
    double base_kv = 1.0;
    int slack_bus = 0; // bus id; 0 picks the first generator bus
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Generator> generators;

    int n() const { return static_cast<int>(buses.size()); }
    // index of the generator at bus id, or -1
    int generator_at(int bus_id) const;
    int slack() const;
};

struct Converter {
    int ac_grid = 0;  // grid ids
    int pcc_bus = 0;  // grid bus the transformer connects to (from the case file)
    int filter_bus = 0; // "f", materialised
    int ac_bus = 0;   // "k", converter side of the phase reactor, materialised
    int dc_grid = 0;
    int dc_bus = 0; // "s"
    double r_t = 0.0, x_t = 0.0;
    double b_f = 0.0;
    double r_c = 0.0, x_c = 0.0;
    double loss_a = 0.0, loss_c = 0.0;
    double modulation = 1.0;
    double s_nom = 1.0;
    double i_max = 1.0;
    double m_b = 0.5, m_c = 0.5;
    double v_min = 0.8, v_max = 1.2; // limits for the two materialised buses
    bool dc_slack = false;

    // quadratic loss coefficient folded onto |V_k - V_f|^2
    double z() const { return loss_c / (r_c * r_c + x_c * x_c); }
};

struct WindFarm {
    int grid = 0;
    int bus = 0;
    double p_rated = 0.0;
    double forecast = 0.0;
    double cos_phi = 1.0;

    double tau_max() const;
};

struct NetworkCase {
    std::string name;
    double base_mva = 100.0;
    std::vector<Grid> grids;
    std::vector<Converter> converters;
    std::vector<WindFarm> wind_farms;

    int grid_index(int grid_id) const; // -1 if absent
    const Grid &grid(int grid_id) const;
    // wind farm index located at (grid id, bus id), or -1
    int wind_at(int grid_id, int bus_id) const;
    // converter index whose k bus or dc bus is (grid id, bus id), or -1
    int converter_at(int grid_id, int bus_id) const;
};

struct Diagnostic {
    std::string path;
    std::string message;
};

// Minimum series resistance forced onto transformer branches.
inline constexpr double kMinTransformerR = 1e-4;

NetworkCase load_case(const std::string &path);
NetworkCase parse_case(const std::string &json_text);
std::string serialize_case(const NetworkCase &c);
std::vector<Diagnostic> validate_case(const NetworkCase &c);

// Field-for-field equality, doubles compared exactly.
bool same_case(const NetworkCase &a, const NetworkCase &b);

// Physical-unit view: MW, MVAr, kV, ohm, siemens, $/MW^2h, $/MWh, $/h.
struct PhysicalBus {
    double p_mw, q_mvar, v_min_kv, v_max_kv, g_mw, b_mvar;
};
struct PhysicalBranch {
    double r_ohm, x_ohm, b_siemens, p_limit_mw, s_limit_mva;
};
struct PhysicalGenerator {
    double p_min_mw, p_max_mw, q_min_mvar, q_max_mvar, c2, c1, c0;
};
struct PhysicalGrid {
    std::vector<PhysicalBus> buses;
    std::vector<PhysicalBranch> branches;
    std::vector<PhysicalGenerator> generators;
};
struct PhysicalCase {
    std::vector<PhysicalGrid> grids;
    std::vector<double> wind_rated_mw, wind_forecast_mw;
};

PhysicalCase to_physical(const NetworkCase &c);
// Overwrites the unit-bearing fields of `into` (topology is taken from it).
void from_physical(const PhysicalCase &p, NetworkCase &into);

} // namespace ccopf

#endif

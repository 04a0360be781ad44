#include "ccopf/grid_model.hpp"
#include "ccopf/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace ccopf {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

int Grid::generator_at(int bus_id) const {
    for (size_t g = 0; g < generators.size(); ++g)
        if (generators[g].bus == bus_id) return static_cast<int>(g);
    return -1;
}

int Grid::slack() const {
    if (slack_bus > 0) return slack_bus;
    if (generators.empty()) return 0;
    return generators.front().bus;
}

double WindFarm::tau_max() const {
    return std::sqrt((1.0 - cos_phi * cos_phi) / (cos_phi * cos_phi));
}

int NetworkCase::grid_index(int grid_id) const {
    for (size_t i = 0; i < grids.size(); ++i)
        if (grids[i].id == grid_id) return static_cast<int>(i);
    return -1;
}

const Grid &NetworkCase::grid(int grid_id) const {
    int i = grid_index(grid_id);
    if (i < 0) throw InputError("unknown grid id " + std::to_string(grid_id));
    return grids[i];
}

int NetworkCase::wind_at(int grid_id, int bus_id) const {
    for (size_t w = 0; w < wind_farms.size(); ++w)
        if (wind_farms[w].grid == grid_id && wind_farms[w].bus == bus_id) return static_cast<int>(w);
    return -1;
}

int NetworkCase::converter_at(int grid_id, int bus_id) const {
    for (size_t c = 0; c < converters.size(); ++c) {
        const Converter &cv = converters[c];
        if ((cv.ac_grid == grid_id && cv.ac_bus == bus_id) || (cv.dc_grid == grid_id && cv.dc_bus == bus_id))
            return static_cast<int>(c);
    }
    return -1;
}

namespace {

[[noreturn]] void schema_error(const std::string &where, const std::string &what) {
    throw InputError("schema violation at " + where + ": " + what);
}

const json &field(const json &obj, const char *key, const std::string &where) {
    if (!obj.is_object()) schema_error(where, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) schema_error(where + "." + key, "missing field");
    return *it;
}

double num(const json &obj, const char *key, const std::string &where) {
    const json &v = field(obj, key, where);
    if (!v.is_number()) schema_error(where + "." + key, "expected a number");
    return v.get<double>();
}

double num_or(const json &obj, const char *key, double dflt, const std::string &where) {
    if (!obj.contains(key)) return dflt;
    return num(obj, key, where);
}

int integer(const json &obj, const char *key, const std::string &where) {
    const json &v = field(obj, key, where);
    if (!v.is_number_integer()) schema_error(where + "." + key, "expected an integer");
    return v.get<int>();
}

int integer_or(const json &obj, const char *key, int dflt, const std::string &where) {
    if (!obj.contains(key)) return dflt;
    return integer(obj, key, where);
}

bool flag_or(const json &obj, const char *key, bool dflt, const std::string &where) {
    if (!obj.contains(key)) return dflt;
    const json &v = obj.at(key);
    if (!v.is_boolean()) schema_error(where + "." + key, "expected true/false");
    return v.get<bool>();
}

const json &array(const json &obj, const char *key, const std::string &where, bool required = true) {
    static const json empty = json::array();
    if (!obj.contains(key)) {
        if (required) schema_error(where + "." + key, "missing field");
        return empty;
    }
    const json &v = obj.at(key);
    if (!v.is_array()) schema_error(where + "." + key, "expected an array");
    return v;
}

std::string at(const std::string &base, const char *key, size_t i) {
    return base + "." + key + "[" + std::to_string(i) + "]";
}

void materialize_converter(NetworkCase &c, Converter &cv) {
    int gi = c.grid_index(cv.ac_grid);
    Grid &g = c.grids[gi];
    Bus f;
    f.id = g.n() + 1;
    f.v_min = cv.v_min;
    f.v_max = cv.v_max;
    f.b_shunt = cv.b_f;
    f.role = BusRole::ConverterFilter;
    g.buses.push_back(f);
    Bus k;
    k.id = g.n() + 1;
    k.v_min = cv.v_min;
    k.v_max = cv.v_max;
    k.role = BusRole::ConverterTerminal;
    g.buses.push_back(k);
    cv.filter_bus = f.id;
    cv.ac_bus = k.id;

    Branch tr;
    tr.from = cv.pcc_bus;
    tr.to = f.id;
    tr.r = std::max(cv.r_t, kMinTransformerR);
    tr.x = cv.x_t;
    tr.is_transformer = true;
    tr.role = BranchRole::ConverterTransformer;
    g.branches.push_back(tr);
    Branch re;
    re.from = f.id;
    re.to = k.id;
    re.r = cv.r_c;
    re.x = cv.x_c;
    re.role = BranchRole::ConverterReactor;
    g.branches.push_back(re);
}

} // namespace

NetworkCase parse_case(const std::string &text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error &e) {
        throw InputError(std::string("schema violation: malformed JSON: ") + e.what());
    }
    if (!root.is_object()) schema_error("$", "expected an object");

    NetworkCase c;
    if (root.contains("name") && root["name"].is_string()) c.name = root["name"].get<std::string>();
    c.base_mva = num(root, "base_mva", "$");
    if (!(c.base_mva > 0.0)) throw InputError("non-positive base_mva");

    const json &grids = array(root, "grids", "$");
    for (size_t gi = 0; gi < grids.size(); ++gi) {
        const json &jg = grids[gi];
        std::string w = at("$", "grids", gi);
        Grid g;
        g.id = integer_or(jg, "id", static_cast<int>(gi) + 1, w);
        const json &kind = field(jg, "kind", w);
        if (kind == "AC")
            g.kind = GridKind::AC;
        else if (kind == "DC")
            g.kind = GridKind::DC;
        else
            schema_error(w + ".kind", "expected \"AC\" or \"DC\"");
        g.base_kv = num_or(jg, "base_kv", 1.0, w);
        if (!(g.base_kv > 0.0)) throw InputError("non-positive base_kv at " + w);
        g.slack_bus = integer_or(jg, "slack_bus", 0, w);

        const json &buses = array(jg, "buses", w);
        for (size_t b = 0; b < buses.size(); ++b) {
            std::string wb = at(w, "buses", b);
            Bus bus;
            bus.id = integer(buses[b], "id", wb);
            bus.p_load = num_or(buses[b], "pd", 0.0, wb);
            bus.q_load = num_or(buses[b], "qd", 0.0, wb);
            bus.v_min = num_or(buses[b], "vmin", 0.9, wb);
            bus.v_max = num_or(buses[b], "vmax", 1.1, wb);
            bus.g_shunt = num_or(buses[b], "gs", 0.0, wb);
            bus.b_shunt = num_or(buses[b], "bs", 0.0, wb);
            g.buses.push_back(bus);
        }
        std::sort(g.buses.begin(), g.buses.end(), [](const Bus &a, const Bus &b) { return a.id < b.id; });
        for (int i = 0; i < g.n(); ++i)
            if (g.buses[i].id != i + 1)
                throw InputError("inconsistent bus references in " + w + ": bus ids must be 1..n without gaps");

        auto bus_ok = [&](int id) { return id >= 1 && id <= g.n(); };
        const json &branches = array(jg, "branches", w, false);
        for (size_t l = 0; l < branches.size(); ++l) {
            std::string wl = at(w, "branches", l);
            Branch br;
            br.from = integer(branches[l], "from", wl);
            br.to = integer(branches[l], "to", wl);
            if (!bus_ok(br.from) || !bus_ok(br.to)) throw InputError("dangling branch endpoint at " + wl);
            br.r = num(branches[l], "r", wl);
            br.x = num_or(branches[l], "x", 0.0, wl);
            br.b = num_or(branches[l], "b", 0.0, wl);
            br.p_limit = num_or(branches[l], "rate_p", 0.0, wl);
            br.s_limit = num_or(branches[l], "rate_s", 0.0, wl);
            br.is_transformer = flag_or(branches[l], "transformer", false, wl);
            if (br.is_transformer) br.r = std::max(br.r, kMinTransformerR);
            if (br.r == 0.0 && br.x == 0.0) schema_error(wl, "zero series impedance");
            g.branches.push_back(br);
        }

        const json &gens = array(jg, "generators", w, false);
        for (size_t k = 0; k < gens.size(); ++k) {
            std::string wk = at(w, "generators", k);
            Generator gen;
            gen.bus = integer(gens[k], "bus", wk);
            if (!bus_ok(gen.bus)) throw InputError("inconsistent bus references: generator bus at " + wk);
            gen.p_min = num(gens[k], "pmin", wk);
            gen.p_max = num(gens[k], "pmax", wk);
            gen.q_min = num_or(gens[k], "qmin", 0.0, wk);
            gen.q_max = num_or(gens[k], "qmax", 0.0, wk);
            const json &cost = field(gens[k], "cost", wk);
            if (!cost.is_array() || cost.size() != 3)
                schema_error(wk + ".cost", "expected [c2, c1, c0]");
            for (int t = 0; t < 3; ++t) {
                if (!cost[t].is_number()) schema_error(wk + ".cost", "expected numbers");
                gen.cost_mw[t] = cost[t].get<double>();
            }
            gen.c2 = gen.cost_mw[0] * c.base_mva * c.base_mva;
            gen.c1 = gen.cost_mw[1] * c.base_mva;
            gen.c0 = gen.cost_mw[2];
            gen.participation = num_or(gens[k], "participation", 0.0, wk);
            g.generators.push_back(gen);
        }
        c.grids.push_back(std::move(g));
    }
    {
        std::set<int> ids;
        for (const Grid &g : c.grids)
            if (!ids.insert(g.id).second) throw InputError("duplicate grid id " + std::to_string(g.id));
    }

    const json &convs = array(root, "converters", "$", false);
    for (size_t k = 0; k < convs.size(); ++k) {
        std::string w = at("$", "converters", k);
        const json &jc = convs[k];
        Converter cv;
        cv.ac_grid = integer(jc, "ac_grid", w);
        cv.pcc_bus = integer(jc, "pcc_bus", w);
        cv.dc_grid = integer(jc, "dc_grid", w);
        cv.dc_bus = integer(jc, "dc_bus", w);
        int ia = c.grid_index(cv.ac_grid), id = c.grid_index(cv.dc_grid);
        if (ia < 0 || id < 0) throw InputError("inconsistent bus references: unknown grid at " + w);
        if (cv.pcc_bus < 1 || cv.pcc_bus > c.grids[ia].n() || cv.dc_bus < 1 || cv.dc_bus > c.grids[id].n())
            throw InputError("inconsistent bus references: converter bus at " + w);
        cv.r_t = num(jc, "rt", w);
        cv.x_t = num(jc, "xt", w);
        cv.b_f = num_or(jc, "bf", 0.0, w);
        cv.r_c = num(jc, "rc", w);
        cv.x_c = num(jc, "xc", w);
        cv.loss_a = num(jc, "loss_a", w);
        cv.loss_c = num(jc, "loss_c", w);
        cv.modulation = num(jc, "modulation", w);
        cv.s_nom = num(jc, "s_nom", w);
        cv.i_max = num_or(jc, "i_max", cv.s_nom / 1.1, w);
        cv.m_b = num(jc, "mb", w);
        cv.m_c = num(jc, "mc", w);
        cv.v_min = num_or(jc, "vmin", 0.8, w);
        cv.v_max = num_or(jc, "vmax", 1.2, w);
        cv.dc_slack = flag_or(jc, "dc_slack", false, w);
        c.converters.push_back(cv);
    }
    // Materialise after all converters are read so bus numbering depends only on declaration order.
    for (Converter &cv : c.converters)
        if (c.grids[c.grid_index(cv.ac_grid)].kind == GridKind::AC) materialize_converter(c, cv);

    // default DC slack: first converter of each DC grid
    for (const Grid &g : c.grids) {
        if (g.kind != GridKind::DC) continue;
        bool any = false;
        for (const Converter &cv : c.converters)
            if (cv.dc_grid == g.id && cv.dc_slack) any = true;
        if (any) continue;
        for (Converter &cv : c.converters)
            if (cv.dc_grid == g.id) {
                cv.dc_slack = true;
                break;
            }
    }

    const json &winds = array(root, "wind_farms", "$", false);
    for (size_t k = 0; k < winds.size(); ++k) {
        std::string w = at("$", "wind_farms", k);
        WindFarm wf;
        wf.grid = integer(winds[k], "grid", w);
        wf.bus = integer(winds[k], "bus", w);
        int gi = c.grid_index(wf.grid);
        if (gi < 0 || wf.bus < 1 || wf.bus > c.grids[gi].n())
            throw InputError("inconsistent bus references: wind farm at " + w);
        wf.p_rated = num(winds[k], "p_rated", w);
        wf.forecast = num(winds[k], "forecast", w);
        wf.cos_phi = num_or(winds[k], "cos_phi", 1.0, w);
        c.wind_farms.push_back(wf);
    }
    return c;
}

NetworkCase load_case(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("case not found: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_case(ss.str());
}

std::string serialize_case(const NetworkCase &c) {
    ojson root;
    root["name"] = c.name;
    root["base_mva"] = c.base_mva;
    root["grids"] = ojson::array();
    for (const Grid &g : c.grids) {
        ojson jg;
        jg["id"] = g.id;
        jg["kind"] = g.kind == GridKind::AC ? "AC" : "DC";
        jg["base_kv"] = g.base_kv;
        if (g.slack_bus > 0) jg["slack_bus"] = g.slack_bus;
        jg["buses"] = ojson::array();
        for (const Bus &b : g.buses) {
            if (b.role != BusRole::Regular) continue;
            ojson jb;
            jb["id"] = b.id;
            jb["pd"] = b.p_load;
            jb["qd"] = b.q_load;
            jb["vmin"] = b.v_min;
            jb["vmax"] = b.v_max;
            jb["gs"] = b.g_shunt;
            jb["bs"] = b.b_shunt;
            jg["buses"].push_back(jb);
        }
        jg["branches"] = ojson::array();
        for (const Branch &br : g.branches) {
            if (br.role != BranchRole::Line) continue;
            ojson jl;
            jl["from"] = br.from;
            jl["to"] = br.to;
            jl["r"] = br.r;
            jl["x"] = br.x;
            jl["b"] = br.b;
            jl["rate_p"] = br.p_limit;
            jl["rate_s"] = br.s_limit;
            jl["transformer"] = br.is_transformer;
            jg["branches"].push_back(jl);
        }
        jg["generators"] = ojson::array();
        for (const Generator &gen : g.generators) {
            ojson jk;
            jk["bus"] = gen.bus;
            jk["pmin"] = gen.p_min;
            jk["pmax"] = gen.p_max;
            jk["qmin"] = gen.q_min;
            jk["qmax"] = gen.q_max;
            jk["cost"] = {gen.cost_mw[0], gen.cost_mw[1], gen.cost_mw[2]};
            jk["participation"] = gen.participation;
            jg["generators"].push_back(jk);
        }
        root["grids"].push_back(jg);
    }
    root["converters"] = ojson::array();
    for (const Converter &cv : c.converters) {
        ojson jc;
        jc["ac_grid"] = cv.ac_grid;
        jc["pcc_bus"] = cv.pcc_bus;
        jc["dc_grid"] = cv.dc_grid;
        jc["dc_bus"] = cv.dc_bus;
        jc["rt"] = cv.r_t;
        jc["xt"] = cv.x_t;
        jc["bf"] = cv.b_f;
        jc["rc"] = cv.r_c;
        jc["xc"] = cv.x_c;
        jc["loss_a"] = cv.loss_a;
        jc["loss_c"] = cv.loss_c;
        jc["modulation"] = cv.modulation;
        jc["s_nom"] = cv.s_nom;
        jc["i_max"] = cv.i_max;
        jc["mb"] = cv.m_b;
        jc["mc"] = cv.m_c;
        jc["vmin"] = cv.v_min;
        jc["vmax"] = cv.v_max;
        jc["dc_slack"] = cv.dc_slack;
        root["converters"].push_back(jc);
    }
    root["wind_farms"] = ojson::array();
    for (const WindFarm &wf : c.wind_farms) {
        ojson jw;
        jw["grid"] = wf.grid;
        jw["bus"] = wf.bus;
        jw["p_rated"] = wf.p_rated;
        jw["forecast"] = wf.forecast;
        jw["cos_phi"] = wf.cos_phi;
        root["wind_farms"].push_back(jw);
    }
    return root.dump(2) + "\n";
}

std::vector<Diagnostic> validate_case(const NetworkCase &c) {
    std::vector<Diagnostic> out;
    auto add = [&](std::string path, std::string msg) { out.push_back({std::move(path), std::move(msg)}); };

    double part = 0.0;
    for (size_t gi = 0; gi < c.grids.size(); ++gi) {
        const Grid &g = c.grids[gi];
        std::string w = "grids[" + std::to_string(gi) + "]";
        for (int i = 0; i < g.n(); ++i) {
            const Bus &b = g.buses[i];
            std::string wb = w + ".buses[" + std::to_string(i) + "]";
            if (b.id != i + 1) add(wb, "bus ids must be contiguous 1..n");
            if (!(b.v_min > 0.0 && b.v_min <= b.v_max)) add(wb, "require 0 < vmin <= vmax");
            if (b.role == BusRole::ConverterFilter && (b.p_load != 0.0 || b.q_load != 0.0 || g.generator_at(b.id) >= 0))
                add(wb, "filter bus hosts load or generator");
            if (b.role == BusRole::ConverterTerminal && g.generator_at(b.id) >= 0)
                add(wb, "converter bus hosts a generator");
            if (g.kind == GridKind::DC && (b.q_load != 0.0 || b.b_shunt != 0.0))
                add(wb, "DC bus with reactive load or shunt");
        }
        for (size_t l = 0; l < g.branches.size(); ++l) {
            const Branch &br = g.branches[l];
            std::string wl = w + ".branches[" + std::to_string(l) + "]";
            if (br.from < 1 || br.from > g.n() || br.to < 1 || br.to > g.n() || br.from == br.to)
                add(wl, "dangling branch endpoint");
            if (g.kind == GridKind::DC && (br.x != 0.0 || br.b != 0.0)) add(wl, "DC branch with reactance or shunt");
            if (br.is_transformer && br.r < kMinTransformerR) add(wl, "transformer resistance below 1e-4");
            if (br.p_limit < 0.0 || br.s_limit < 0.0) add(wl, "negative flow limit");
        }
        std::set<int> gen_buses;
        for (size_t k = 0; k < g.generators.size(); ++k) {
            const Generator &gen = g.generators[k];
            std::string wk = w + ".generators[" + std::to_string(k) + "]";
            if (gen.bus < 1 || gen.bus > g.n()) add(wk, "generator bus does not exist");
            if (!gen_buses.insert(gen.bus).second) add(wk, "more than one generator at bus");
            if (gen.p_min > gen.p_max) add(wk, "pmin > pmax");
            if (gen.q_min > gen.q_max) add(wk, "qmin > qmax");
            if (gen.c2 < 0.0) add(wk, "negative quadratic cost");
            if (g.kind == GridKind::DC && (gen.q_min != 0.0 || gen.q_max != 0.0))
                add(wk, "DC generator with reactive bounds");
            if (gen.participation < 0.0) add(wk, "negative participation factor");
            part += gen.participation;
        }
        if (g.kind == GridKind::AC && g.generators.empty()) add(w, "AC grid without a generator (no slack)");
        if (g.kind == GridKind::AC && g.slack() > 0 && g.generator_at(g.slack()) < 0)
            add(w, "slack bus hosts no generator");
    }
    if (std::abs(part - 1.0) > 1e-9) add("grids", "participation factors do not sum to 1");

    std::set<std::pair<int, int>> used;
    for (size_t k = 0; k < c.converters.size(); ++k) {
        const Converter &cv = c.converters[k];
        std::string w = "converters[" + std::to_string(k) + "]";
        int ia = c.grid_index(cv.ac_grid), id = c.grid_index(cv.dc_grid);
        if (ia < 0 || c.grids[ia].kind != GridKind::AC) add(w, "ac_grid is not an AC grid");
        if (id < 0 || c.grids[id].kind != GridKind::DC) add(w, "dc_grid is not a DC grid");
        if (!(cv.m_b > 0.0 && cv.m_c > 0.0 && cv.modulation > 0.0)) add(w, "m, mb, mc must be positive");
        if (!(cv.r_c * cv.r_c + cv.x_c * cv.x_c > 0.0)) add(w, "zero phase reactor impedance");
        if (!(cv.s_nom > 0.0 && cv.i_max > 0.0)) add(w, "non-positive rating");
        if (cv.loss_a < 0.0 || cv.loss_c < 0.0) add(w, "negative loss coefficient");
        if (ia >= 0 && (cv.filter_bus < 1 || cv.ac_bus < 1 || cv.filter_bus > c.grids[ia].n() ||
                        cv.ac_bus > c.grids[ia].n()))
            add(w, "converter buses not materialised");
        if (!used.insert({cv.dc_grid, cv.dc_bus}).second) add(w, "dc bus shared by two converters");
        if (id >= 0 && c.grids[id].generator_at(cv.dc_bus) >= 0) add(w, "dc bus hosts a generator");
    }
    for (const Grid &g : c.grids) {
        if (g.kind != GridKind::DC) continue;
        int slack = 0, n = 0;
        for (const Converter &cv : c.converters)
            if (cv.dc_grid == g.id) {
                ++n;
                slack += cv.dc_slack ? 1 : 0;
            }
        if (n > 0 && slack != 1) add("grids", "DC grid " + std::to_string(g.id) + " needs exactly one DC slack converter");
    }
    for (size_t k = 0; k < c.wind_farms.size(); ++k) {
        const WindFarm &wf = c.wind_farms[k];
        std::string w = "wind_farms[" + std::to_string(k) + "]";
        if (!(wf.cos_phi > 0.0 && wf.cos_phi <= 1.0)) add(w, "require 0 < cos_phi <= 1");
        if (!(wf.forecast >= 0.0 && wf.forecast <= wf.p_rated)) add(w, "require 0 <= forecast <= p_rated");
        if (c.converter_at(wf.grid, wf.bus) >= 0) add(w, "wind farm at a converter bus");
        int gi = c.grid_index(wf.grid);
        if (gi >= 0 && wf.bus >= 1 && wf.bus <= c.grids[gi].n() &&
            c.grids[gi].buses[wf.bus - 1].role == BusRole::ConverterFilter)
            add(w, "wind farm at a filter bus");
        for (size_t j = 0; j < k; ++j)
            if (c.wind_farms[j].grid == wf.grid && c.wind_farms[j].bus == wf.bus) add(w, "two wind farms at one bus");
    }
    return out;
}

bool same_case(const NetworkCase &a, const NetworkCase &b) {
    if (a.name != b.name || a.base_mva != b.base_mva || a.grids.size() != b.grids.size() ||
        a.converters.size() != b.converters.size() || a.wind_farms.size() != b.wind_farms.size())
        return false;
    for (size_t i = 0; i < a.grids.size(); ++i) {
        const Grid &x = a.grids[i], &y = b.grids[i];
        if (x.id != y.id || x.kind != y.kind || x.base_kv != y.base_kv || x.slack_bus != y.slack_bus ||
            x.buses.size() != y.buses.size() || x.branches.size() != y.branches.size() ||
            x.generators.size() != y.generators.size())
            return false;
        for (size_t k = 0; k < x.buses.size(); ++k) {
            const Bus &p = x.buses[k], &q = y.buses[k];
            if (p.id != q.id || p.p_load != q.p_load || p.q_load != q.q_load || p.v_min != q.v_min ||
                p.v_max != q.v_max || p.g_shunt != q.g_shunt || p.b_shunt != q.b_shunt || p.role != q.role)
                return false;
        }
        for (size_t k = 0; k < x.branches.size(); ++k) {
            const Branch &p = x.branches[k], &q = y.branches[k];
            if (p.from != q.from || p.to != q.to || p.r != q.r || p.x != q.x || p.b != q.b ||
                p.p_limit != q.p_limit || p.s_limit != q.s_limit || p.is_transformer != q.is_transformer ||
                p.role != q.role)
                return false;
        }
        for (size_t k = 0; k < x.generators.size(); ++k) {
            const Generator &p = x.generators[k], &q = y.generators[k];
            if (p.bus != q.bus || p.p_min != q.p_min || p.p_max != q.p_max || p.q_min != q.q_min ||
                p.q_max != q.q_max || p.c2 != q.c2 || p.c1 != q.c1 || p.c0 != q.c0 ||
                p.participation != q.participation || !std::equal(p.cost_mw, p.cost_mw + 3, q.cost_mw))
                return false;
        }
    }
    for (size_t k = 0; k < a.converters.size(); ++k) {
        const Converter &p = a.converters[k], &q = b.converters[k];
        if (p.ac_grid != q.ac_grid || p.pcc_bus != q.pcc_bus || p.filter_bus != q.filter_bus ||
            p.ac_bus != q.ac_bus || p.dc_grid != q.dc_grid || p.dc_bus != q.dc_bus || p.r_t != q.r_t ||
            p.x_t != q.x_t || p.b_f != q.b_f || p.r_c != q.r_c || p.x_c != q.x_c || p.loss_a != q.loss_a ||
            p.loss_c != q.loss_c || p.modulation != q.modulation || p.s_nom != q.s_nom || p.i_max != q.i_max ||
            p.m_b != q.m_b || p.m_c != q.m_c || p.v_min != q.v_min || p.v_max != q.v_max ||
            p.dc_slack != q.dc_slack)
            return false;
    }
    for (size_t k = 0; k < a.wind_farms.size(); ++k) {
        const WindFarm &p = a.wind_farms[k], &q = b.wind_farms[k];
        if (p.grid != q.grid || p.bus != q.bus || p.p_rated != q.p_rated || p.forecast != q.forecast ||
            p.cos_phi != q.cos_phi)
            return false;
    }
    return true;
}

PhysicalCase to_physical(const NetworkCase &c) {
    PhysicalCase p;
    const double S = c.base_mva;
    for (const Grid &g : c.grids) {
        PhysicalGrid pg;
        const double V = g.base_kv;
        const double Z = V * V / S;
        for (const Bus &b : g.buses)
            pg.buses.push_back({b.p_load * S, b.q_load * S, b.v_min * V, b.v_max * V, b.g_shunt * S, b.b_shunt * S});
        for (const Branch &br : g.branches)
            pg.branches.push_back({br.r * Z, br.x * Z, br.b / Z, br.p_limit * S, br.s_limit * S});
        for (const Generator &gen : g.generators)
            pg.generators.push_back({gen.p_min * S, gen.p_max * S, gen.q_min * S, gen.q_max * S, gen.c2 / (S * S),
                                     gen.c1 / S, gen.c0});
        p.grids.push_back(std::move(pg));
    }
    for (const WindFarm &wf : c.wind_farms) {
        p.wind_rated_mw.push_back(wf.p_rated * S);
        p.wind_forecast_mw.push_back(wf.forecast * S);
    }
    return p;
}

void from_physical(const PhysicalCase &p, NetworkCase &c) {
    const double S = c.base_mva;
    for (size_t i = 0; i < c.grids.size(); ++i) {
        Grid &g = c.grids[i];
        const PhysicalGrid &pg = p.grids.at(i);
        const double V = g.base_kv;
        const double Z = V * V / S;
        for (size_t k = 0; k < g.buses.size(); ++k) {
            const PhysicalBus &b = pg.buses.at(k);
            g.buses[k].p_load = b.p_mw / S;
            g.buses[k].q_load = b.q_mvar / S;
            g.buses[k].v_min = b.v_min_kv / V;
            g.buses[k].v_max = b.v_max_kv / V;
            g.buses[k].g_shunt = b.g_mw / S;
            g.buses[k].b_shunt = b.b_mvar / S;
        }
        for (size_t k = 0; k < g.branches.size(); ++k) {
            const PhysicalBranch &b = pg.branches.at(k);
            g.branches[k].r = b.r_ohm / Z;
            g.branches[k].x = b.x_ohm / Z;
            g.branches[k].b = b.b_siemens * Z;
            g.branches[k].p_limit = b.p_limit_mw / S;
            g.branches[k].s_limit = b.s_limit_mva / S;
        }
        for (size_t k = 0; k < g.generators.size(); ++k) {
            const PhysicalGenerator &b = pg.generators.at(k);
            Generator &gen = g.generators[k];
            gen.p_min = b.p_min_mw / S;
            gen.p_max = b.p_max_mw / S;
            gen.q_min = b.q_min_mvar / S;
            gen.q_max = b.q_max_mvar / S;
            gen.c2 = b.c2 * S * S;
            gen.c1 = b.c1 * S;
            gen.c0 = b.c0;
        }
    }
    for (size_t w = 0; w < c.wind_farms.size(); ++w) {
        c.wind_farms[w].p_rated = p.wind_rated_mw.at(w) / S;
        c.wind_farms[w].forecast = p.wind_forecast_mw.at(w) / S;
    }
}

} // namespace ccopf

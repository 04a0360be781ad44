#include "ccopf/report.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <sstream>

namespace ccopf {

using nlohmann::ordered_json;

namespace {

ordered_json num(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

ordered_json vec(const Eigen::VectorXd &v) {
    ordered_json a = ordered_json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
    return a;
}

ordered_json vec(const std::vector<double> &v) {
    ordered_json a = ordered_json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

std::string g17(double v) {
    if (std::isnan(v)) return "";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::string opf_report(const NetworkCase &net, const OpfResult &r, const UncertaintyModel &m) {
    ordered_json j;
    j["case"] = net.name;
    j["status"] = to_string(r.status);
    j["rank_ok"] = r.rank_ok;
    j["message"] = r.message;
    j["penalty_mode"] = to_string(r.mode);
    j["iterations"] = r.iterations;
    j["objective"] = num(r.objective);
    j["generation_cost"] = num(r.generation_cost);
    j["unpenalized_cost"] = num(r.unpenalized_cost);
    j["penalty"] = num(r.penalty);
    j["delta_opt"] = num(r.delta_opt);
    j["mu"] = vec(r.mu);
    j["gamma"] = vec(r.gamma);
    j["tau"] = vec(r.tau);

    ordered_json u;
    u["epsilon"] = m.epsilon;
    u["beta"] = m.beta;
    u["samples"] = m.samples.rows();
    u["lower"] = vec(m.lower);
    u["upper"] = vec(m.upper);
    ordered_json verts = ordered_json::array();
    for (const auto &v : m.vertices) verts.push_back(vec(v));
    u["vertices"] = verts;
    j["uncertainty"] = u;

    ordered_json states = ordered_json::array();
    for (size_t s = 0; s < r.states.size(); ++s) {
        const StateSolution &st = r.states[s];
        ordered_json js;
        js["state"] = s;
        js["zeta"] = s == 0 ? vec(Eigen::VectorXd::Zero(m.n_w)) : vec(m.vertices[s - 1]);
        js["recovered"] = st.recovered;
        js["min_rho"] = num(st.min_rho);
        ordered_json gens = ordered_json::array();
        size_t g = 0;
        for (const Grid &grid : net.grids)
            for (const Generator &gen : grid.generators) {
                ordered_json e;
                e["grid"] = grid.id;
                e["bus"] = gen.bus;
                e["pg"] = g < st.pg.size() ? num(st.pg[g]) : ordered_json(nullptr);
                e["qg"] = g < st.qg.size() ? num(st.qg[g]) : ordered_json(nullptr);
                gens.push_back(e);
                ++g;
            }
        js["generators"] = gens;
        ordered_json conv = ordered_json::array();
        for (size_t k = 0; k < st.pc.size(); ++k) {
            ordered_json e;
            e["pc"] = num(st.pc[k]);
            e["qc"] = num(st.qc[k]);
            e["pcs"] = num(st.pcs[k]);
            conv.push_back(e);
        }
        js["converters"] = conv;
        ordered_json grids = ordered_json::array();
        for (size_t gi = 0; gi < st.V.size(); ++gi) {
            ordered_json e;
            e["id"] = net.grids[gi].id;
            std::vector<double> vm, va;
            for (int b = 0; b < st.V[gi].size(); ++b) {
                vm.push_back(std::abs(st.V[gi](b)));
                va.push_back(std::arg(st.V[gi](b)) * 180.0 / M_PI);
            }
            e["vm"] = vec(vm);
            e["va_deg"] = vec(va);
            grids.push_back(e);
        }
        js["grids"] = grids;
        states.push_back(js);
    }
    j["states"] = states;

    ordered_json trace = ordered_json::array();
    for (const PenaltyIteration &it : r.trace) {
        ordered_json e;
        e["iteration"] = it.iteration;
        e["mu"] = vec(it.mu);
        e["min_rho"] = vec(it.min_rho);
        e["generation_cost"] = num(it.generation_cost);
        e["penalty"] = num(it.penalty);
        e["solver_iterations"] = it.solver_iterations;
        trace.push_back(e);
    }
    j["trace"] = trace;
    return j.dump(2) + "\n";
}

std::string rho_trace_csv(const OpfResult &r) {
    std::ostringstream os;
    os << "iteration,state,mu,min_rho,generation_cost,penalty\n";
    for (const PenaltyIteration &it : r.trace)
        for (size_t s = 0; s < it.min_rho.size(); ++s) {
            const double mu = s == 0 || s > it.mu.size() ? NAN : it.mu[s - 1];
            os << it.iteration << ',' << s << ',' << g17(mu) << ','
               << (std::isinf(it.min_rho[s]) ? std::string("inf") : g17(it.min_rho[s])) << ','
               << g17(it.generation_cost) << ',' << g17(it.penalty) << '\n';
        }
    return os.str();
}

std::string mc_report(const McReport &r, const McSummary &s) {
    ordered_json j;
    j["samples"] = r.samples;
    j["seed"] = s.seed;
    j["violations"] = r.violations;
    j["eps_emp"] = r.eps_emp;
    j["epsilon"] = s.epsilon;
    j["compliant"] = r.eps_emp <= s.epsilon;
    j["valid"] = r.valid;
    j["nonconverged"] = r.nonconverged;
    j["clamped"] = r.clamped;
    ordered_json fam;
    fam["gen_p"] = r.p_gen_p;
    fam["gen_q"] = r.p_gen_q;
    fam["bus_v"] = r.p_bus_v;
    fam["flow"] = r.p_flow;
    fam["converter"] = r.p_converter;
    j["violation_probability"] = fam;
    j["deterministic_cost"] = num(s.deterministic_cost);
    j["generation_cost"] = num(s.generation_cost);
    j["cost_of_uncertainty_percent"] =
        s.deterministic_cost > 0.0 ? num(cost_of_uncertainty(s.generation_cost, s.deterministic_cost))
                                   : ordered_json(nullptr);
    return j.dump(2) + "\n";
}

std::string beta_table_csv(const std::vector<BetaRow> &rows) {
    std::ostringstream os;
    os << "beta_star,kept_samples,eps_emp,cost_of_uncertainty,generation_cost,penalty_iterations,ok,lower,upper,error\n";
    for (const BetaRow &r : rows) {
        std::string lo, hi;
        for (int w = 0; w < r.lower.size(); ++w) {
            lo += (w ? ";" : "") + g17(r.lower(w));
            hi += (w ? ";" : "") + g17(r.upper(w));
        }
        std::string err = r.error;
        for (char &ch : err)
            if (ch == ',' || ch == '\n') ch = ' ';
        os << g17(r.beta_star) << ',' << r.kept_samples << ',' << g17(r.eps_emp) << ',' << g17(r.cou) << ','
           << g17(r.generation_cost) << ',' << r.penalty_iterations << ',' << (r.ok ? 1 : 0) << ',' << lo << ','
           << hi << ',' << err << '\n';
    }
    return os.str();
}

std::string benders_report(const BendersResult &b, const std::vector<double> &mu, double monolithic_objective) {
    ordered_json j;
    j["converged"] = b.state.converged;
    j["iterations"] = b.state.trace.size();
    j["objective"] = num(b.objective);
    j["generation_cost"] = num(b.result.generation_cost);
    j["penalty"] = num(b.result.penalty);
    j["mu"] = vec(mu);
    j["gamma"] = vec(b.result.gamma);
    j["pg0"] = vec(b.state.pg0);
    int opt = 0, feas = 0;
    for (const auto &c : b.state.cuts) (c.feasibility ? feas : opt)++;
    j["optimality_cuts"] = opt;
    j["feasibility_cuts"] = feas;
    j["rank_ok"] = b.result.rank_ok;
    if (std::isfinite(monolithic_objective)) {
        j["monolithic_objective"] = monolithic_objective;
        j["relative_difference"] = std::abs(b.objective - monolithic_objective) / std::abs(monolithic_objective);
    }
    return j.dump(2) + "\n";
}

} // namespace ccopf

#include "ccopf/benders.hpp"
#include "ccopf/errors.hpp"
#include "ccopf/parallel.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

namespace ccopf {

namespace {

FormulationSpec sub_spec(int vertex, const std::vector<double> &mu, const std::vector<double> &tau,
                         const std::vector<double> &pg0, const BendersOptions &opts, PenaltyMode mode) {
    FormulationSpec spec;
    spec.states = {vertex + 1};
    spec.mu = mu;
    spec.mode = mode;
    spec.fixed_tau = tau;
    spec.fixed_pg0 = pg0;
    spec.overlap = opts.overlap;
    return spec;
}

} // namespace

SubResult solve_optimality_sub(const OpfContext &ctx, int vertex, const std::vector<double> &mu,
                               const std::vector<double> &tau, const std::vector<double> &pg0,
                               const BendersOptions &opts, PenaltyMode mode) {
    SubResult out;
    try {
        OpfResult r = solve_fixed(ctx, sub_spec(vertex, mu, tau, pg0, opts, mode), opts.solver, false);
        out.value = r.objective;
        out.grad = r.copy_duals;
        out.gamma = r.gamma.at(vertex);
    } catch (const InfeasibleError &) {
        out.feasible = false;
    }
    return out;
}

SubResult solve_feasibility_sub(const OpfContext &ctx, int vertex, const std::vector<double> &tau,
                                const std::vector<double> &pg0, const BendersOptions &opts) {
    FormulationSpec spec = sub_spec(vertex, std::vector<double>(ctx.model.n_vertices(), 0.0), tau, pg0, opts,
                                    PenaltyMode::ActiveLoss);
    spec.feasibility_slacks = true;
    OpfResult r = solve_fixed(ctx, spec, opts.solver, false);
    SubResult out;
    out.feasible = r.objective <= opts.feas_tol;
    out.value = std::max(r.objective, 0.0);
    out.grad = r.copy_duals;
    out.gamma = r.gamma.at(vertex);
    return out;
}

BendersResult run_benders(const OpfContext &ctx, const std::vector<double> &mu, const std::vector<double> &tau,
                          const BendersOptions &opts, PenaltyMode mode) {
    const int nv = ctx.model.n_vertices();
    if (static_cast<int>(mu.size()) != nv) throw InputError("one penalty weight per vertex required");
    BendersResult out;
    BendersState &st = out.state;
    for (int J = 1; J <= opts.max_iter; ++J) {
        FormulationSpec ms;
        ms.states = {0};
        ms.mu = mu;
        ms.mode = mode;
        ms.fixed_tau = tau;
        ms.overlap = opts.overlap;
        ms.master_theta = true;
        ms.cuts = st.cuts;
        ms.theta_min = opts.theta_min;
        OpfResult master;
        try {
            master = solve_fixed(ctx, ms, opts.solver, false);
        } catch (const InfeasibleError &e) {
            int nf = 0;
            for (const auto &c : st.cuts) nf += c.feasibility ? 1 : 0;
            throw InfeasibleError(std::string("Benders master infeasible with ") + std::to_string(nf) +
                                  " feasibility cuts: " + e.what());
        }
        st.pg0 = master.states[0].pg;

        std::vector<SubResult> subs(nv);
        parallel_for(nv, opts.jobs, [&](int v) {
            SubResult r;
            if (mu[v] > 0.0) r = solve_optimality_sub(ctx, v, mu, tau, st.pg0, opts, mode);
            if (mu[v] <= 0.0 || !r.feasible) {
                SubResult f = solve_feasibility_sub(ctx, v, tau, st.pg0, opts);
                if (!f.feasible || mu[v] <= 0.0) r = f;
                if (f.feasible && mu[v] <= 0.0) {
                    r.value = 0.0;
                    r.grad.assign(st.pg0.size(), 0.0);
                }
            }
            subs[v] = r;
        });

        BendersIteration rec;
        rec.iteration = J;
        rec.theta = master.theta;
        rec.master_objective = master.objective;
        rec.generation_cost = master.generation_cost;
        bool all_feasible = true;
        double pen = 0.0;
        for (int v = 0; v < nv; ++v) {
            if (!subs[v].feasible) {
                all_feasible = false;
                rec.slack += subs[v].value;
                FormulationSpec::Cut c;
                c.value = subs[v].value;
                c.grad = subs[v].grad;
                c.anchor = st.pg0;
                c.feasibility = true;
                st.cuts.push_back(c);
                ++rec.feasibility_cuts;
            } else {
                pen += subs[v].value;
            }
        }
        rec.penalty = all_feasible ? pen : std::numeric_limits<double>::quiet_NaN();
        bool done = false;
        if (all_feasible) {
            const double gap = std::abs(master.theta - pen);
            done = gap <= opts.tol * std::abs(master.generation_cost + pen) && rec.slack <= opts.tol;
            if (!done) {
                FormulationSpec::Cut c;
                c.value = pen;
                c.grad.assign(st.pg0.size(), 0.0);
                for (int v = 0; v < nv; ++v)
                    for (size_t g = 0; g < c.grad.size(); ++g) c.grad[g] += subs[v].grad[g];
                c.anchor = st.pg0;
                st.cuts.push_back(c);
                rec.optimality_cuts = 1;
            }
        }
        st.trace.push_back(rec);
        if (done) {
            st.converged = true;
            out.objective = master.generation_cost + pen;
            break;
        }
    }
    if (!st.converged) {
        out.result.message = "Benders reached the iteration limit";
        return out;
    }

    // rank recovery on every state at the final dispatch
    FormulationSpec ms;
    ms.states = {0};
    ms.mu = mu;
    ms.mode = mode;
    ms.fixed_tau = tau;
    ms.overlap = opts.overlap;
    ms.master_theta = true;
    ms.cuts = st.cuts;
    ms.theta_min = opts.theta_min;
    OpfResult master = solve_fixed(ctx, ms, opts.solver, true, opts.jobs);
    OpfResult &res = out.result;
    res = master;
    res.states.resize(ctx.n_states());
    res.gamma.assign(nv, 0.0);
    res.mu = mu;
    double pen = 0.0;
    std::vector<OpfResult> subs(nv);
    parallel_for(nv, opts.jobs, [&](int v) {
        subs[v] = solve_fixed(ctx, sub_spec(v, mu, tau, master.states[0].pg, opts, mode), opts.solver, true);
    });
    for (int v = 0; v < nv; ++v) {
        res.states[v + 1] = subs[v].states[v + 1];
        res.gamma[v] = subs[v].gamma[v];
        pen += subs[v].objective;
    }
    res.penalty = pen;
    res.objective = res.generation_cost + pen;
    res.rank_ok = true;
    for (const auto &s : res.states) res.rank_ok = res.rank_ok && s.recovered;
    res.iterations = static_cast<int>(st.trace.size());
    res.copy_duals.clear();
    return out;
}

std::string benders_trace_csv(const BendersState &s) {
    std::ostringstream os;
    os << "iteration,theta,sum_mu_gamma,sum_slack,master_objective\n";
    char buf[256];
    for (const auto &r : s.trace) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", r.iteration, r.theta, r.penalty, r.slack,
                      r.master_objective);
        os << buf;
    }
    return os.str();
}

} // namespace ccopf

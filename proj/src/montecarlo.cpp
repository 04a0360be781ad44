#include "ccopf/montecarlo.hpp"
#include "ccopf/errors.hpp"
#include "ccopf/parallel.hpp"

#include <cstdio>
#include <sstream>

namespace ccopf {

SampleOutcome evaluate_sample(const NetworkCase &net, const OpfResult &result, const UncertaintyModel &model,
                              const Eigen::VectorXd &zeta, const McOptions &opts) {
    SampleOutcome out;
    PolicyPoint pp = apply_corrective_control(net, result, model, zeta, opts.psi);
    out.clamped = pp.interp.clamped;
    if (!result.states.empty() && result.states[0].V.size() == net.grids.size()) pp.spec.warm = result.states[0].V;
    PfSolution pf = sequential_acdc_pf(net, pp.spec);
    if (pf.converged && opts.agc) pf = agc_redistribution(net, pp.spec, pf);
    out.converged = pf.converged;
    if (pf.converged) out.check = check_limits(net, pf, opts.deadbands);
    return out;
}

McReport run_monte_carlo(const NetworkCase &net, const OpfResult &result, const UncertaintyModel &model,
                         const Eigen::MatrixXd &errors, const McOptions &opts) {
    if (errors.cols() != model.n_w) throw InputError("validation samples have the wrong number of columns");
    McReport r;
    r.samples = static_cast<int>(errors.rows());
    r.outcomes.resize(r.samples);
    parallel_for(r.samples, opts.jobs, [&](int i) {
        r.outcomes[i] = evaluate_sample(net, result, model, errors.row(i).transpose(), opts);
    });
    int gp = 0, gq = 0, bv = 0, fl = 0, cv = 0;
    for (const SampleOutcome &o : r.outcomes) {
        r.clamped += o.clamped ? 1 : 0;
        if (!o.converged) {
            ++r.nonconverged;
            ++r.violations;
            continue;
        }
        gp += o.check.violated_gen_p;
        gq += o.check.violated_gen_q;
        bv += o.check.violated_bus_v;
        fl += o.check.violated_flow;
        cv += o.check.violated_converter;
        r.violations += o.check.any() ? 1 : 0;
    }
    if (r.samples > 0) {
        const double n = r.samples;
        r.eps_emp = r.violations / n;
        r.p_gen_p = gp / n;
        r.p_gen_q = gq / n;
        r.p_bus_v = bv / n;
        r.p_flow = fl / n;
        r.p_converter = cv / n;
        r.valid = r.nonconverged <= opts.max_nonconverged * n;
    }
    return r;
}

double cost_of_uncertainty(double cc_cost, double det_cost) {
    if (!(det_cost > 0.0)) throw InputError("deterministic cost must be positive");
    return 100.0 * (cc_cost - det_cost) / det_cost;
}

double deterministic_cost(const NetworkCase &net, const OpfOptions &opts) {
    UncertaintyModel none = box_model(Eigen::VectorXd::Zero(static_cast<int>(net.wind_farms.size())),
                                      Eigen::VectorXd::Zero(static_cast<int>(net.wind_farms.size())));
    OpfContext ctx = make_context(net, none, opts);
    FormulationSpec spec;
    spec.states = {0};
    spec.mu.assign(none.n_vertices(), 0.0);
    spec.mode = opts.mode;
    spec.overlap = opts.overlap;
    return solve_fixed(ctx, spec, opts.solver, false).generation_cost;
}

std::vector<BetaRow> tune_beta(const NetworkCase &net, const UncertaintyModel &base, const std::vector<double> &schedule,
                               const OpfOptions &opf, const Eigen::MatrixXd &validation, const McOptions &mc,
                               double det_cost) {
    std::vector<BetaRow> rows;
    for (double b : schedule) {
        BetaRow row;
        row.beta_star = b;
        try {
            UncertaintyModel m = discard_worst_case(base, b);
            row.kept_samples = static_cast<int>(m.samples.rows());
            row.lower = m.lower;
            row.upper = m.upper;
            OpfContext ctx = make_context(net, m, opf);
            OpfResult res = penalty_loop(ctx, opf);
            row.penalty_iterations = res.iterations;
            row.generation_cost = res.generation_cost;
            if (!res.rank_ok) throw NumericError(res.message.empty() ? "penalty loop failed" : res.message);
            row.cou = cost_of_uncertainty(res.generation_cost, det_cost);
            row.eps_emp = run_monte_carlo(net, res, m, validation, mc).eps_emp;
        } catch (const std::exception &e) {
            row.ok = false;
            row.error = e.what();
        }
        rows.push_back(row);
    }
    return rows;
}

std::string sample_csv(const McReport &r) {
    std::ostringstream os;
    os << "sample,converged,clamped,violated,gen_p,gen_q,bus_v,flow,converter\n";
    char buf[256];
    for (size_t i = 0; i < r.outcomes.size(); ++i) {
        const SampleOutcome &o = r.outcomes[i];
        std::snprintf(buf, sizeof buf, "%zu,%d,%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", i, o.converged ? 1 : 0,
                      o.clamped ? 1 : 0, (!o.converged || o.check.any()) ? 1 : 0, o.check.gen_p, o.check.gen_q,
                      o.check.bus_v, o.check.flow, o.check.converter);
        os << buf;
    }
    return os.str();
}

} // namespace ccopf

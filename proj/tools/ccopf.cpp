#include "ccopf/benders.hpp"
#include "ccopf/config.hpp"
#include "ccopf/errors.hpp"
#include "ccopf/montecarlo.hpp"
#include "ccopf/opf.hpp"
#include "ccopf/powerflow.hpp"
#include "ccopf/report.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>

using namespace ccopf;
namespace fs = std::filesystem;

namespace {

struct Flags {
    std::string config, case_path, samples, validation, out, penalty, psi;
    double epsilon = 0, beta = 0, dmu = 0, mu = 0, benders_tol = 0;
    std::vector<double> beta_schedule, zeta;
    int mc_samples = 0, jobs = 0;
    std::uint64_t seed = 0;
    bool benders = false, compare = false, no_agc = false;
};

struct Options {
    CLI::Option *case_path, *samples, *validation, *out, *penalty, *psi, *epsilon, *beta, *dmu, *mu, *benders_tol,
        *beta_schedule, *zeta, *mc_samples, *jobs, *seed, *benders, *compare, *no_agc;
};

Options add_flags(CLI::App *app, Flags &f) {
    Options o;
    app->add_option("--config", f.config, "JSON run configuration; flags override it");
    o.case_path = app->add_option("--case", f.case_path, "network case (JSON)");
    o.samples = app->add_option("--samples", f.samples, "forecast-error samples (CSV, one column per wind farm)");
    o.validation = app->add_option("--validation", f.validation, "validation errors (CSV) instead of copula draws");
    o.out = app->add_option("--out", f.out, "output directory");
    o.epsilon = app->add_option("--epsilon", f.epsilon, "violation probability");
    o.beta = app->add_option("--beta", f.beta, "confidence parameter");
    o.beta_schedule = app->add_option("--beta-schedule", f.beta_schedule, "beta* values for the tuning table");
    o.dmu = app->add_option("--dmu", f.dmu, "penalty weight increment");
    o.penalty = app->add_option("--penalty", f.penalty, "penalty objective")->check(CLI::IsMember({"loss", "qgen"}));
    o.psi = app->add_option("--psi", f.psi, "interpolation scheme")->check(CLI::IsMember({"facet", "product"}));
    o.benders = app->add_flag("--benders", f.benders, "solve by Benders decomposition");
    o.benders_tol = app->add_option("--benders-tol", f.benders_tol, "Benders relative tolerance");
    o.mu = app->add_option("--mu", f.mu, "uniform penalty weight (skips the penalty loop)");
    o.compare = app->add_flag("--compare", f.compare, "also solve the monolithic problem and report the difference");
    o.mc_samples = app->add_option("--mc-samples", f.mc_samples, "number of validation samples");
    o.seed = app->add_option("--seed", f.seed, "seed for validation samples");
    o.no_agc = app->add_flag("--no-agc", f.no_agc, "skip the slack redistribution in the power flows");
    o.zeta = app->add_option("--zeta", f.zeta, "forecast errors for pf (one per wind farm)");
    o.jobs = app->add_option("--jobs", f.jobs, "worker threads");
    return o;
}

RunConfig resolve_config(const Flags &f, const Options &o) {
    RunConfig c = f.config.empty() ? RunConfig{} : load_config(f.config);
    if (o.case_path->count()) c.case_path = f.case_path;
    if (o.samples->count()) c.samples_path = f.samples;
    if (o.validation->count()) c.validation_path = f.validation;
    if (o.out->count()) c.out_dir = f.out;
    if (o.epsilon->count()) c.epsilon = f.epsilon;
    if (o.beta->count()) c.beta = f.beta;
    if (o.beta_schedule->count()) c.beta_schedule = f.beta_schedule;
    if (o.dmu->count()) c.delta_mu = f.dmu;
    if (o.penalty->count()) c.penalty = parse_penalty_mode(f.penalty);
    if (o.psi->count()) c.psi = parse_psi_scheme(f.psi);
    if (o.benders->count()) c.benders = f.benders;
    if (o.benders_tol->count()) c.benders_tol = f.benders_tol;
    if (o.mu->count()) c.mu = f.mu;
    if (o.compare->count()) c.compare = f.compare;
    if (o.mc_samples->count()) c.mc_samples = f.mc_samples;
    if (o.seed->count()) c.seed = f.seed;
    if (o.no_agc->count()) c.agc = !f.no_agc;
    if (o.zeta->count()) c.zeta = f.zeta;
    if (o.jobs->count()) c.jobs = f.jobs;
    validate_config(c);
    return c;
}

void write_file(const RunConfig &c, const std::string &name, const std::string &text) {
    fs::create_directories(c.out_dir);
    const fs::path p = fs::path(c.out_dir) / name;
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw InputError("cannot write " + p.string());
}

void note(const char *fmt, double a = 0.0, double b = 0.0, double c = 0.0) {
    std::fprintf(stderr, fmt, a, b, c);
    std::fputc('\n', stderr);
}

struct Solved {
    NetworkCase net;
    UncertaintyModel model;
    std::unique_ptr<OpfContext> ctx;
    OpfResult result;
};

// penalty loop, or a single solve when a uniform weight is configured
void solve_opf(const RunConfig &c, Solved &s) {
    s.net = load_case(c.case_path);
    s.model = study_model(s.net, c);
    const OpfOptions opts = opf_options(c);
    s.ctx = std::make_unique<OpfContext>(make_context(s.net, s.model, opts));
    if (c.mu) {
        FormulationSpec spec;
        for (int st = 0; st < s.ctx->n_states(); ++st) spec.states.push_back(st);
        spec.mu.assign(s.model.n_vertices(), *c.mu);
        spec.mode = opts.mode;
        spec.overlap = opts.overlap;
        s.result = solve_fixed(*s.ctx, spec, opts.solver, true, opts.jobs);
        s.result.iterations = 1;
    } else {
        s.result = penalty_loop(*s.ctx, opts);
    }
    note("opf: %g iterations, generation cost %.6f, delta_opt %.4f%%", s.result.iterations,
         s.result.generation_cost, s.result.delta_opt);
}

void require_rank(const OpfResult &r) {
    if (!r.rank_ok)
        throw NumericError(r.message.empty() ? "no rank-1 solution recovered within the iteration limit" : r.message);
}

int cmd_benders(const RunConfig &c);

int cmd_solve(const RunConfig &c) {
    if (c.benders) return cmd_benders(c);
    Solved s;
    solve_opf(c, s);
    write_file(c, "config.json", config_json(c));
    write_file(c, "result.json", opf_report(s.net, s.result, s.model));
    write_file(c, "rho_trace.csv", rho_trace_csv(s.result));
    require_rank(s.result);
    return 0;
}

int cmd_benders(const RunConfig &c) {
    const NetworkCase net = load_case(c.case_path);
    const UncertaintyModel model = study_model(net, c);
    const OpfOptions opts = opf_options(c);
    const OpfContext ctx = make_context(net, model, opts);
    std::vector<double> mu, tau;
    double mono = std::numeric_limits<double>::quiet_NaN();
    if (c.mu) {
        mu.assign(model.n_vertices(), *c.mu);
        FormulationSpec spec;
        for (int st = 0; st < ctx.n_states(); ++st) spec.states.push_back(st);
        spec.mu = mu;
        spec.mode = opts.mode;
        OpfResult r = solve_fixed(ctx, spec, opts.solver, false);
        tau = r.tau;
        if (c.compare) mono = r.objective;
    } else {
        OpfResult r = penalty_loop(ctx, opts);
        require_rank(r);
        mu = r.mu;
        tau = r.tau;
        if (c.compare) mono = r.objective;
    }
    BendersResult b = run_benders(ctx, mu, tau, benders_options(c), opts.mode);
    note("benders: %g iterations, objective %.6f", static_cast<double>(b.state.trace.size()), b.objective);
    write_file(c, "config.json", config_json(c));
    write_file(c, "benders_trace.csv", benders_trace_csv(b.state));
    write_file(c, "benders.json", benders_report(b, mu, mono));
    if (b.state.converged) write_file(c, "result.json", opf_report(net, b.result, model));
    if (!b.state.converged) throw NumericError("Benders did not converge within " + std::to_string(c.benders_max_iter) +
                                               " iterations");
    return 0;
}

int cmd_montecarlo(const RunConfig &c) {
    Solved s;
    solve_opf(c, s);
    require_rank(s.result);
    const double det = deterministic_cost(s.net, opf_options(c));
    const Eigen::MatrixXd errors = validation_errors(s.net, c);
    const McOptions mc = mc_options(c);
    McReport rep = run_monte_carlo(s.net, s.result, s.model, errors, mc);
    note("montecarlo: eps_emp %.4f over %g samples", rep.eps_emp, rep.samples);
    write_file(c, "config.json", config_json(c));
    write_file(c, "result.json", opf_report(s.net, s.result, s.model));
    write_file(c, "samples.csv", sample_csv(rep));
    McSummary sum{det, s.result.generation_cost, c.epsilon, c.seed};
    write_file(c, "montecarlo.json", mc_report(rep, sum));
    if (!c.beta_schedule.empty()) {
        if (c.samples_path.empty()) throw InputError("beta schedule needs a sample file");
        std::vector<BetaRow> rows = tune_beta(s.net, s.model, c.beta_schedule, opf_options(c), errors, mc, det);
        write_file(c, "beta_table.csv", beta_table_csv(rows));
    }
    return 0;
}

int cmd_pf(const RunConfig &c) {
    Solved s;
    solve_opf(c, s);
    require_rank(s.result);
    Eigen::VectorXd zeta = Eigen::VectorXd::Zero(s.model.n_w);
    if (!c.zeta.empty()) {
        if (static_cast<int>(c.zeta.size()) != s.model.n_w) throw InputError("--zeta needs one value per wind farm");
        for (int w = 0; w < s.model.n_w; ++w) zeta(w) = c.zeta[w];
    }
    PolicyPoint pp = apply_corrective_control(s.net, s.result, s.model, zeta, c.psi);
    pp.spec.warm = s.result.states[0].V;
    PfSolution pf = sequential_acdc_pf(s.net, pp.spec);
    if (pf.converged && c.agc) pf = agc_redistribution(s.net, pp.spec, pf);
    write_file(c, "config.json", config_json(c));
    write_file(c, "pf.csv", pf_csv(s.net, pf));
    nlohmann::ordered_json j;
    j["converged"] = pf.converged;
    j["message"] = pf.message;
    j["residual"] = pf.residual;
    j["outer_iterations"] = pf.outer_iterations;
    j["switched"] = pf.switched;
    j["clamped"] = pp.interp.clamped;
    if (pf.converged) {
        LimitCheck lc = check_limits(s.net, pf, Deadbands{});
        j["violated"] = lc.any();
        j["worst_excess"] = lc.worst();
    }
    write_file(c, "pf.json", j.dump(2) + "\n");
    if (!pf.converged) throw NumericError("power flow did not converge: " + pf.message);
    return 0;
}

int cmd_export(const RunConfig &c) {
    const NetworkCase net = load_case(c.case_path);
    const UncertaintyModel model = study_model(net, c);
    const OpfOptions opts = opf_options(c);
    const OpfContext ctx = make_context(net, model, opts);
    FormulationSpec spec;
    for (int st = 0; st < ctx.n_states(); ++st) spec.states.push_back(st);
    spec.mu.assign(model.n_vertices(), c.mu.value_or(0.0));
    spec.mode = opts.mode;
    Formulation f(ctx, spec);
    ConicProblem p = assemble_standard_form(f.constraints());
    write_file(c, "config.json", config_json(c));
    fs::create_directories(c.out_dir);
    export_sdpa(p, (fs::path(c.out_dir) / "problem.dat-s").string());
    std::fprintf(stderr, "export-sdpa: %d rows, %zu psd blocks, %d nonnegative, %d free\n", p.m, p.psd.size(),
                 p.nonneg.dim, p.free.dim);
    return 0;
}

int fail(int code, const char *kind, const std::string &msg) {
    nlohmann::ordered_json j;
    j["error"]["code"] = code;
    j["error"]["kind"] = kind;
    j["error"]["message"] = msg;
    std::cerr << j.dump() << '\n';
    return code;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Chance-constrained AC/DC optimal power flow"};
    app.require_subcommand(1);
    struct Sub {
        const char *name, *help;
        int (*run)(const RunConfig &);
    };
    const Sub subs[] = {
        {"solve", "penalty loop (or Benders with --benders), writes result.json and rho_trace.csv", cmd_solve},
        {"benders", "Benders decomposition over the uncertainty vertices", cmd_benders},
        {"montecarlo", "solve, then validate the policy by sampled power flows", cmd_montecarlo},
        {"pf", "solve, then run the AC/DC power flow at one realisation", cmd_pf},
        {"export-sdpa", "write the relaxation in SDPA sparse format", cmd_export},
    };
    std::vector<Flags> flags(std::size(subs));
    std::vector<Options> opts;
    std::vector<CLI::App *> apps;
    for (size_t i = 0; i < std::size(subs); ++i) {
        apps.push_back(app.add_subcommand(subs[i].name, subs[i].help));
        opts.push_back(add_flags(apps.back(), flags[i]));
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        return fail(2, "input", e.what());
    }
    try {
        for (size_t i = 0; i < apps.size(); ++i)
            if (apps[i]->parsed()) return subs[i].run(resolve_config(flags[i], opts[i]));
    } catch (const InputError &e) {
        return fail(2, "input", e.what());
    } catch (const InfeasibleError &e) {
        return fail(3, "infeasible", e.what());
    } catch (const NumericError &e) {
        return fail(4, "numeric", e.what());
    } catch (const std::exception &e) {
        return fail(4, "numeric", e.what());
    }
    return 2;
}

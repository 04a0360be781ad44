#include "ccopf/config.hpp"
#include "ccopf/errors.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace ccopf {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string resolve(const std::string &p, const std::string &base) {
    if (p.empty() || base.empty() || fs::path(p).is_absolute()) return p;
    return (fs::path(base) / p).lexically_normal().string();
}

template <class T> T get(const json &j, const char *key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception &) {
        throw InputError(std::string("config field '") + key + "' has the wrong type");
    }
}

void bad(const std::string &field, const std::string &what) {
    throw InputError("config field '" + field + "' " + what);
}

} // namespace

RunConfig parse_config(const std::string &json_text, const std::string &base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception &e) {
        throw InputError(std::string("malformed config JSON: ") + e.what());
    }
    if (!j.is_object()) throw InputError("config must be a JSON object");
    static const std::set<std::string> known = {
        "case",          "samples",        "epsilon",     "beta",       "beta_schedule", "dmu",
        "rho_threshold", "penalty_max_iter", "penalty",   "psi",        "merge_threshold", "tol_gap",
        "tol_feas",      "benders",        "benders_tol", "theta_min",  "benders_max_iter", "mu",
        "compare",       "mc_samples",     "seed",        "sigma",      "correlation",   "validation",
        "agc",           "zeta",           "jobs",        "out"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) throw InputError("unknown config field '" + it.key() + "'");

    RunConfig c;
    if (j.contains("case")) c.case_path = resolve(get<std::string>(j, "case"), base_dir);
    if (j.contains("samples")) c.samples_path = resolve(get<std::string>(j, "samples"), base_dir);
    if (j.contains("validation")) c.validation_path = resolve(get<std::string>(j, "validation"), base_dir);
    if (j.contains("out")) c.out_dir = resolve(get<std::string>(j, "out"), base_dir);
    if (j.contains("epsilon")) c.epsilon = get<double>(j, "epsilon");
    if (j.contains("beta")) c.beta = get<double>(j, "beta");
    if (j.contains("beta_schedule")) c.beta_schedule = get<std::vector<double>>(j, "beta_schedule");
    if (j.contains("dmu")) c.delta_mu = get<double>(j, "dmu");
    if (j.contains("rho_threshold")) c.rho_threshold = get<double>(j, "rho_threshold");
    if (j.contains("penalty_max_iter")) c.penalty_max_iter = get<int>(j, "penalty_max_iter");
    if (j.contains("penalty")) c.penalty = parse_penalty_mode(get<std::string>(j, "penalty"));
    if (j.contains("psi")) c.psi = parse_psi_scheme(get<std::string>(j, "psi"));
    if (j.contains("merge_threshold")) c.merge_threshold = get<double>(j, "merge_threshold");
    if (j.contains("tol_gap")) c.tol_gap = get<double>(j, "tol_gap");
    if (j.contains("tol_feas")) c.tol_feas = get<double>(j, "tol_feas");
    if (j.contains("benders")) c.benders = get<bool>(j, "benders");
    if (j.contains("benders_tol")) c.benders_tol = get<double>(j, "benders_tol");
    if (j.contains("theta_min")) c.theta_min = get<double>(j, "theta_min");
    if (j.contains("benders_max_iter")) c.benders_max_iter = get<int>(j, "benders_max_iter");
    if (j.contains("mu") && !j.at("mu").is_null()) c.mu = get<double>(j, "mu");
    if (j.contains("compare")) c.compare = get<bool>(j, "compare");
    if (j.contains("mc_samples")) c.mc_samples = get<int>(j, "mc_samples");
    if (j.contains("seed")) c.seed = get<std::uint64_t>(j, "seed");
    if (j.contains("sigma")) c.sigma = get<std::vector<double>>(j, "sigma");
    if (j.contains("correlation")) {
        auto rows = get<std::vector<std::vector<double>>>(j, "correlation");
        const int n = static_cast<int>(rows.size());
        c.correlation.resize(n, n);
        for (int r = 0; r < n; ++r) {
            if (static_cast<int>(rows[r].size()) != n) bad("correlation", "must be square");
            for (int k = 0; k < n; ++k) c.correlation(r, k) = rows[r][k];
        }
    }
    if (j.contains("agc")) c.agc = get<bool>(j, "agc");
    if (j.contains("zeta")) c.zeta = get<std::vector<double>>(j, "zeta");
    if (j.contains("jobs")) c.jobs = get<int>(j, "jobs");
    return c;
}

RunConfig load_config(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("config not found: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), fs::path(path).parent_path().string());
}

void validate_config(const RunConfig &c) {
    if (c.case_path.empty()) bad("case", "is required");
    if (!fs::is_regular_file(c.case_path)) throw InputError("case not found: " + c.case_path);
    if (!c.samples_path.empty() && !fs::is_regular_file(c.samples_path))
        throw InputError("samples not found: " + c.samples_path);
    if (!c.validation_path.empty() && !fs::is_regular_file(c.validation_path))
        throw InputError("validation samples not found: " + c.validation_path);
    if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) bad("epsilon", "must lie in (0, 1)");
    if (!(c.beta > 0.0 && c.beta < 1.0)) bad("beta", "must lie in (0, 1)");
    for (double b : c.beta_schedule)
        if (!(b >= c.beta && b < 1.0)) bad("beta_schedule", "entries must lie in [beta, 1)");
    if (!(c.delta_mu > 0.0)) bad("dmu", "must be positive");
    if (!(c.rho_threshold > 1.0)) bad("rho_threshold", "must exceed 1");
    if (c.penalty_max_iter < 1) bad("penalty_max_iter", "must be at least 1");
    if (!(c.merge_threshold >= 0.0)) bad("merge_threshold", "must be non-negative");
    if (!(c.tol_gap > 0.0) || !(c.tol_feas > 0.0)) bad("tol_gap/tol_feas", "must be positive");
    if (!(c.benders_tol > 0.0)) bad("benders_tol", "must be positive");
    if (c.benders_max_iter < 1) bad("benders_max_iter", "must be at least 1");
    if (c.mu && !(*c.mu >= 0.0)) bad("mu", "must be non-negative");
    if (c.mc_samples < 0) bad("mc_samples", "must be non-negative");
    for (double s : c.sigma)
        if (!(s > 0.0)) bad("sigma", "entries must be positive");
    if (c.correlation.size() > 0 && (c.correlation - c.correlation.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        bad("correlation", "must be symmetric");
    if (c.jobs < 1) bad("jobs", "must be at least 1");
    if (c.out_dir.empty()) bad("out", "must not be empty");
}

std::string config_json(const RunConfig &c) {
    ordered_json j;
    j["case"] = c.case_path;
    j["samples"] = c.samples_path;
    j["validation"] = c.validation_path;
    j["epsilon"] = c.epsilon;
    j["beta"] = c.beta;
    j["beta_schedule"] = c.beta_schedule;
    j["dmu"] = c.delta_mu;
    j["rho_threshold"] = c.rho_threshold;
    j["penalty_max_iter"] = c.penalty_max_iter;
    j["penalty"] = to_string(c.penalty);
    j["psi"] = to_string(c.psi);
    j["merge_threshold"] = c.merge_threshold;
    j["tol_gap"] = c.tol_gap;
    j["tol_feas"] = c.tol_feas;
    j["benders"] = c.benders;
    j["benders_tol"] = c.benders_tol;
    j["theta_min"] = c.theta_min;
    j["benders_max_iter"] = c.benders_max_iter;
    j["mu"] = c.mu ? ordered_json(*c.mu) : ordered_json(nullptr);
    j["compare"] = c.compare;
    j["mc_samples"] = c.mc_samples;
    j["seed"] = c.seed;
    j["sigma"] = c.sigma;
    ordered_json corr = ordered_json::array();
    for (int r = 0; r < c.correlation.rows(); ++r) {
        std::vector<double> row(c.correlation.cols());
        for (int k = 0; k < c.correlation.cols(); ++k) row[k] = c.correlation(r, k);
        corr.push_back(row);
    }
    j["correlation"] = corr;
    j["agc"] = c.agc;
    j["zeta"] = c.zeta;
    j["jobs"] = c.jobs;
    j["out"] = c.out_dir;
    return j.dump(2) + "\n";
}

OpfOptions opf_options(const RunConfig &c) {
    OpfOptions o;
    o.mode = c.penalty;
    o.delta_mu = c.delta_mu;
    o.rho_threshold = c.rho_threshold;
    o.max_iter = c.penalty_max_iter;
    o.merge_threshold = c.merge_threshold;
    o.solver.tol_gap = c.tol_gap;
    o.solver.tol_feas = c.tol_feas;
    o.jobs = c.jobs;
    return o;
}

BendersOptions benders_options(const RunConfig &c) {
    BendersOptions o;
    o.tol = c.benders_tol;
    o.max_iter = c.benders_max_iter;
    o.theta_min = c.theta_min;
    o.solver.tol_gap = c.tol_gap;
    o.solver.tol_feas = c.tol_feas;
    o.jobs = c.jobs;
    return o;
}

McOptions mc_options(const RunConfig &c) {
    McOptions o;
    o.psi = c.psi;
    o.agc = c.agc;
    o.jobs = c.jobs;
    return o;
}

UncertaintyModel study_model(const NetworkCase &net, const RunConfig &c) {
    const int nw = static_cast<int>(net.wind_farms.size());
    if (c.samples_path.empty()) return box_model(Eigen::VectorXd::Zero(nw), Eigen::VectorXd::Zero(nw));
    Eigen::MatrixXd s = read_samples_csv(c.samples_path);
    if (s.cols() != nw)
        throw InputError("samples have " + std::to_string(s.cols()) + " columns but the case has " +
                         std::to_string(nw) + " wind farms");
    return build_rect_set(s, c.epsilon, c.beta);
}

Eigen::MatrixXd validation_errors(const NetworkCase &net, const RunConfig &c) {
    const int nw = static_cast<int>(net.wind_farms.size());
    if (!c.validation_path.empty()) {
        Eigen::MatrixXd v = read_samples_csv(c.validation_path);
        if (v.cols() != nw) throw InputError("validation samples have the wrong number of columns");
        return v;
    }
    if (!c.sigma.empty() && static_cast<int>(c.sigma.size()) != nw) bad("sigma", "needs one entry per wind farm");
    CopulaSpec cs;
    for (int w = 0; w < nw; ++w) {
        const WindFarm &f = net.wind_farms[w];
        cs.forecast.push_back(f.forecast);
        cs.rated.push_back(f.p_rated);
        cs.sigma.push_back(c.sigma.empty() ? 0.1 * f.p_rated : c.sigma.at(w));
    }
    cs.correlation = c.correlation.size() > 0 ? c.correlation : Eigen::MatrixXd::Identity(nw, nw);
    return generate_copula_samples(cs, c.mc_samples, c.seed);
}

} // namespace ccopf

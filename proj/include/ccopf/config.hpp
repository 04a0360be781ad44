#ifndef CCOPF_CONFIG_HPP
#define CCOPF_CONFIG_HPP

#include "ccopf/benders.hpp"
#include "ccopf/grid_model.hpp"
#include "ccopf/montecarlo.hpp"
#include "ccopf/opf.hpp"
#include "ccopf/uncertainty.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ccopf {

// Everything a CLI run depends on. Paths are stored as given after
// resolution against the config file directory.
struct RunConfig {
    std::string case_path;
    std::string samples_path; // empty: forecast only (zero-width box)
    double epsilon = 0.05;
    double beta = 1e-3;
    std::vector<double> beta_schedule;

    double delta_mu = 25.0;
    double rho_threshold = 1e5;
    int penalty_max_iter = 40;
    PenaltyMode penalty = PenaltyMode::ActiveLoss;
    PsiScheme psi = PsiScheme::Facet;
    double merge_threshold = 0.0;
    double tol_gap = 1e-8;
    double tol_feas = 1e-8;

    bool benders = false;
    double benders_tol = 1e-4;
    double theta_min = -1e8;
    int benders_max_iter = 100;
    std::optional<double> mu; // uniform weight; taken from the penalty loop when absent
    bool compare = false;     // also solve the monolithic problem

    int mc_samples = 10000;
    std::uint64_t seed = 12345;
    std::vector<double> sigma;  // per wind farm, p.u.; default 0.1 p_rated
    Eigen::MatrixXd correlation; // default identity
    std::string validation_path; // CSV of forecast errors, overrides the copula
    bool agc = true;

    std::vector<double> zeta; // pf: realisation to evaluate (default forecast)
    int jobs = 1;
    std::string out_dir = "out";
};

// Reads a JSON config. Unknown keys are rejected.
RunConfig load_config(const std::string &path);
RunConfig parse_config(const std::string &json_text, const std::string &base_dir = "");
// Range and path checks; throws InputError naming the field.
void validate_config(const RunConfig &c);
// Canonical JSON echo (fixed key order).
std::string config_json(const RunConfig &c);

OpfOptions opf_options(const RunConfig &c);
BendersOptions benders_options(const RunConfig &c);
McOptions mc_options(const RunConfig &c);

// Box from the sample file, or a zero-width box when none is configured.
UncertaintyModel study_model(const NetworkCase &net, const RunConfig &c);
// Validation errors: the CSV if given, else copula draws around the case forecast.
Eigen::MatrixXd validation_errors(const NetworkCase &net, const RunConfig &c);

} // namespace ccopf

#endif

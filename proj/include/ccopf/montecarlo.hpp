#ifndef CCOPF_MONTECARLO_HPP
#define CCOPF_MONTECARLO_HPP

#include "ccopf/opf.hpp"
#include "ccopf/powerflow.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace ccopf {

struct McOptions {
    Deadbands deadbands;
    bool agc = true;
    PsiScheme psi = PsiScheme::Facet;
    int jobs = 1;
    double max_nonconverged = 0.01; // fraction; above it the report is flagged invalid
};

struct SampleOutcome {
    bool converged = false;
    bool clamped = false;
    LimitCheck check;
};

struct McReport {
    int samples = 0;
    int violations = 0;
    double eps_emp = 0.0;
    double p_gen_p = 0.0, p_gen_q = 0.0, p_bus_v = 0.0, p_flow = 0.0, p_converter = 0.0;
    int clamped = 0;
    int nonconverged = 0; // counted as violations
    bool valid = true;
    std::vector<SampleOutcome> outcomes;
};

// Each row of `errors` is one forecast-error realisation.
McReport run_monte_carlo(const NetworkCase &net, const OpfResult &result, const UncertaintyModel &model,
                         const Eigen::MatrixXd &errors, const McOptions &opts);

SampleOutcome evaluate_sample(const NetworkCase &net, const OpfResult &result, const UncertaintyModel &model,
                              const Eigen::VectorXd &zeta, const McOptions &opts);

// 100 (cc - det) / det
double cost_of_uncertainty(double cc_cost, double det_cost);

// Generation cost of the forecast-only relaxation (no uncertainty).
double deterministic_cost(const NetworkCase &net, const OpfOptions &opts);

struct BetaRow {
    double beta_star = 0.0;
    int kept_samples = 0;
    double eps_emp = 0.0;
    double cou = 0.0;
    double generation_cost = 0.0;
    int penalty_iterations = 0;
    bool ok = true;
    std::string error;
    Eigen::VectorXd lower, upper;
};

std::vector<BetaRow> tune_beta(const NetworkCase &net, const UncertaintyModel &base, const std::vector<double> &schedule,
                               const OpfOptions &opf, const Eigen::MatrixXd &validation, const McOptions &mc,
                               double det_cost);

std::string sample_csv(const McReport &r);

} // namespace ccopf

#endif

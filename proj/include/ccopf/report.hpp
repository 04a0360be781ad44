#ifndef CCOPF_REPORT_HPP
#define CCOPF_REPORT_HPP

#include "ccopf/benders.hpp"
#include "ccopf/montecarlo.hpp"
#include "ccopf/opf.hpp"
#include "ccopf/uncertainty.hpp"

#include <string>
#include <vector>

namespace ccopf {

// Reports are JSON with a fixed key order; identical inputs give identical bytes.
// A min_rho of infinity (lambda3 numerically zero) is written as null.

std::string opf_report(const NetworkCase &net, const OpfResult &r, const UncertaintyModel &m);

// iteration,state,mu,min_rho,generation_cost,penalty
std::string rho_trace_csv(const OpfResult &r);

struct McSummary {
    double deterministic_cost = 0.0;
    double generation_cost = 0.0;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
};
std::string mc_report(const McReport &r, const McSummary &s);

std::string beta_table_csv(const std::vector<BetaRow> &rows);

std::string benders_report(const BendersResult &b, const std::vector<double> &mu, double monolithic_objective);

} // namespace ccopf

#endif

#ifndef CCOPF_BENDERS_HPP
#define CCOPF_BENDERS_HPP

#include "ccopf/opf.hpp"

#include <string>
#include <vector>

namespace ccopf {

struct BendersOptions {
    double tol = 1e-4;
    int max_iter = 100;
    double theta_min = -1e8;
    double feas_tol = 1e-6; // slack sum treated as zero
    SolverOptions solver;
    OverlapMode overlap = OverlapMode::Explicit;
    int jobs = 1;
};

struct BendersIteration {
    int iteration = 0;
    double theta = 0.0;
    double penalty = 0.0; // sum mu gamma; NaN while some vertex is infeasible
    double slack = 0.0;   // sum S_v
    double master_objective = 0.0;
    double generation_cost = 0.0;
    int optimality_cuts = 0, feasibility_cuts = 0;
};

struct SubResult {
    bool feasible = true;
    double value = 0.0;        // mu gamma, or S for a feasibility subproblem
    std::vector<double> grad;  // Lambda or Omega, per generator
    double gamma = 0.0;
};

struct BendersState {
    std::vector<FormulationSpec::Cut> cuts; // append-only pool
    std::vector<double> pg0;               // incumbent forecast dispatch
    std::vector<BendersIteration> trace;
    bool converged = false;
};

// Vertex v with the forecast dispatch fixed at pg0.
SubResult solve_optimality_sub(const OpfContext &ctx, int vertex, const std::vector<double> &mu,
                               const std::vector<double> &tau, const std::vector<double> &pg0,
                               const BendersOptions &opts, PenaltyMode mode = PenaltyMode::ActiveLoss);
SubResult solve_feasibility_sub(const OpfContext &ctx, int vertex, const std::vector<double> &tau,
                                const std::vector<double> &pg0, const BendersOptions &opts);

struct BendersResult {
    OpfResult result; // states recovered at the final dispatch
    BendersState state;
    double objective = 0.0; // master generation cost + sum of subproblem values
};

BendersResult run_benders(const OpfContext &ctx, const std::vector<double> &mu, const std::vector<double> &tau,
                          const BendersOptions &opts, PenaltyMode mode = PenaltyMode::ActiveLoss);

std::string benders_trace_csv(const BendersState &s);

} // namespace ccopf

#endif

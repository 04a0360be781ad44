#ifndef CCOPF_OPF_HPP
#define CCOPF_OPF_HPP

#include "ccopf/chordal.hpp"
#include "ccopf/conic.hpp"
#include "ccopf/grid_model.hpp"
#include "ccopf/matrix_builder.hpp"
#include "ccopf/uncertainty.hpp"

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ccopf {

enum class PenaltyMode { ActiveLoss, ReactivePower };
enum class OverlapMode { Explicit, Shared };

const char *to_string(PenaltyMode m);
PenaltyMode parse_penalty_mode(const std::string &s); // "loss" | "qgen"

struct OpfOptions {
    PenaltyMode mode = PenaltyMode::ActiveLoss;
    double delta_mu = 25.0;
    double rho_threshold = 1e5;
    int max_iter = 40;
    double merge_threshold = 0.0;
    OverlapMode overlap = OverlapMode::Explicit;
    SolverOptions solver;
    int jobs = 1;
};

// Everything that does not change between solves: per-grid admittance
// operators, clique structures and the uncertainty box.
struct OpfContext {
    const NetworkCase *net = nullptr;
    UncertaintyModel model;
    std::vector<AuxiliaryMatrices> aux;     // per grid, case order
    std::vector<CliqueStructure> cliques;   // per grid
    std::vector<SparseSym> mkf;             // per converter
    double cost_scale = 1.0;                // objective rows are divided by this

    int n_states() const { return 1 + model.n_vertices(); }
    // wind forecast error at (grid index, bus index) for state s (0 = forecast)
    double zeta_at(int state, int grid, int bus) const;
    double wind_forecast_at(int grid, int bus) const;
    double zeta_sum(int state) const;
};

OpfContext make_context(const NetworkCase &net, const UncertaintyModel &model, const OpfOptions &opts = {});

// Which parts of the chance-constrained problem are assembled.
struct FormulationSpec {
    std::vector<int> states;      // subset of 0..n_v; 0 is the forecast state
    std::vector<double> mu;       // per vertex (size n_v)
    PenaltyMode mode = PenaltyMode::ActiveLoss;
    std::optional<std::vector<double>> fixed_tau; // per wind farm; optimised when empty
    OverlapMode overlap = OverlapMode::Explicit;

    // Benders hooks
    std::optional<std::vector<double>> fixed_pg0; // per generator (global order): forecast dispatch copy
    bool feasibility_slacks = false;              // slack the nodal P/Q balances of vertex states
    bool master_theta = false;                    // add Theta to the objective
    struct Cut {
        double value = 0.0;
        std::vector<double> grad;   // per generator
        std::vector<double> anchor; // per generator
        bool feasibility = false;
    };
    std::vector<Cut> cuts;
    double theta_min = -1e8;
};

// Assembled problem with the index maps needed to read a solution back.
class Formulation {
public:
    Formulation(const OpfContext &ctx, FormulationSpec spec);

    const ConstraintSet &constraints() const { return cs_; }
    const FormulationSpec &spec() const { return spec_; }
    const OpfContext &context() const { return *ctx_; }

    // Tr{op W} of (state, grid) as an affine expression
    AffineExpr trace(const SparseSym &op, int state, int grid) const;
    // generator output at (state, grid, bus): Tr{Y_k W} + P_D - wind
    AffineExpr p_injection(int state, int grid, int bus) const;
    AffineExpr q_injection(int state, int grid, int bus) const;

    // variable values -> Hermitian clique blocks for (state, grid)
    std::vector<Eigen::MatrixXcd> clique_blocks(const Eigen::VectorXd &y, int state, int grid) const;

    int alpha_var(int gen) const { return alpha_[gen]; }
    int gamma_var(int vertex) const { return gamma_[vertex]; }
    int tau_var(int farm) const { return tau_[farm]; }
    int theta_var() const { return theta_; }
    int pg0_var(int gen) const { return pg0_[gen]; }
    // free-block column index of the Benders copy equality for generator g
    const std::string &copy_id(int gen) const { return copy_ids_[gen]; }

    struct GenRef {
        int grid, bus; // indices
        const Generator *gen;
    };
    const std::vector<GenRef> &generators() const { return gens_; }
    bool has_state(int s) const;

private:
    struct PairKey {
        int a, b;
        bool operator<(const PairKey &o) const { return a != o.a ? a < o.a : b < o.b; }
    };
    struct GridVars {
        // per clique: pair -> variable (re for a <= b, im for a < b)
        std::vector<std::map<PairKey, int>> re, im;
    };
    int var_re(int state, int grid, int a, int b) const;
    int var_im(int state, int grid, int a, int b) const; // a < b
    void add_grid_variables(int state, int grid);
    void add_state_constraints(int state);
    void add_converter_constraints(int state);
    void add_coupling(int state);

    const OpfContext *ctx_;
    FormulationSpec spec_;
    ConstraintSet cs_;
    std::map<int, std::vector<GridVars>> vars_; // state -> per grid
    std::vector<int> alpha_, gamma_, tau_, pg0_;
    std::vector<std::string> copy_ids_;
    int theta_ = -1;
    std::vector<GenRef> gens_;
};

struct StateSolution {
    std::vector<Eigen::VectorXcd> V;                  // recovered voltages per grid
    std::vector<std::vector<Eigen::MatrixXcd>> H;     // clique blocks per grid
    std::vector<std::vector<double>> rho, rho1;       // lambda2/lambda3 and lambda1/lambda2 per clique
    double min_rho = kInfinity;
    std::vector<double> pg, qg;                       // per generator (from the relaxation)
    std::vector<double> pc, qc, pcs;                  // per converter: AC side at k, DC side at s
    std::vector<std::vector<double>> vm2;             // Tr{M_k W} per grid, per bus
    bool recovered = false;
};

struct PenaltyIteration {
    int iteration = 0;
    std::vector<double> mu;
    std::vector<double> min_rho; // per state
    double generation_cost = 0.0;
    double penalty = 0.0;
    int solver_iterations = 0;
};

struct OpfResult {
    std::vector<StateSolution> states; // 0 = forecast
    std::vector<double> gamma, tau, mu;
    double objective = 0.0;        // generation cost + penalty
    double generation_cost = 0.0;  // f2
    double penalty = 0.0;
    double unpenalized_cost = 0.0; // f1
    double delta_opt = 0.0;        // percent
    bool rank_ok = false;
    int iterations = 0;
    std::vector<PenaltyIteration> trace;
    SolveStatus status = SolveStatus::NumErr;
    std::string message;
    PenaltyMode mode = PenaltyMode::ActiveLoss;
    // d objective / d fixed forecast dispatch, per generator (Benders subproblems only)
    std::vector<double> copy_duals;
    double theta = 0.0; // master only
};

// One solve with fixed penalty weights. Throws InfeasibleError/NumericError on
// a non-optimal solver status.
OpfResult solve_fixed(const OpfContext &ctx, const FormulationSpec &spec, const SolverOptions &solver,
                      bool recover = true, int jobs = 1);

OpfResult penalty_loop(const OpfContext &ctx, const OpfOptions &opts);

// lambda2/lambda3 of a symmetric block (descending), infinity when lambda3 <= 1e-12 lambda1
double eig_ratio(const Eigen::MatrixXd &block);
// lambda1/lambda2
double eig_ratio_top(const Eigen::MatrixXd &block);

// Real lift of a Hermitian block: 1/2 [[Re H, -Im H],[Im H, Re H]]
Eigen::MatrixXd lift_hermitian(const Eigen::MatrixXcd &H);

// Stitches clique-wise dominant eigenvectors into one voltage vector with the
// reference bus at angle 0. dc forces (and checks) a real result.
Eigen::VectorXcd recover_voltages(const CliqueStructure &cs, const std::vector<Eigen::MatrixXcd> &H, int reference,
                                  bool dc);

double generation_cost(const NetworkCase &net, const std::vector<double> &pg); // per generator, global order

} // namespace ccopf

#endif

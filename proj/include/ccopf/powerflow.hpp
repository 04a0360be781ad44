#ifndef CCOPF_POWERFLOW_HPP
#define CCOPF_POWERFLOW_HPP

#include "ccopf/grid_model.hpp"
#include "ccopf/opf.hpp"
#include "ccopf/uncertainty.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace ccopf {

// Set-points for one sequential AC/DC power flow. Generator and converter
// vectors follow the global order (grids in case order, then file order).
struct PfSpec {
    std::vector<double> pg;      // active set-point; the AC slack absorbs the mismatch
    std::vector<double> vg;      // |V| set-point at AC generator buses
    std::vector<double> pc, qc;  // converter injection into the AC grid at bus k
    std::vector<double> vdc;     // DC voltage set-point, used for the DC-slack converter
    std::vector<double> wind_p, wind_q;
    bool enforce_q_limits = true;
    double tol = 1e-8;
    int max_newton = 30;
    int max_outer = 60;
    std::vector<Eigen::VectorXcd> warm; // optional start per grid
};

struct PfSolution {
    std::vector<Eigen::VectorXcd> V; // per grid
    std::vector<double> pg, qg;      // per generator, actual
    std::vector<double> pc, qc, pcs; // per converter: AC injection at k, DC injection at s
    std::vector<double> loss, current;
    std::vector<double> slack_dev; // per grid: slack P minus its set-point (0 for DC grids)
    std::vector<double> wind_p, wind_q;
    bool converged = false;
    double residual = 0.0; // worst bus or converter balance mismatch
    int outer_iterations = 0;
    int switched = 0; // PV buses re-typed PQ
    std::string message;
};

struct AcPfBus {
    enum Type { PQ, PV, Slack } type = PQ;
    double p = 0.0, q = 0.0; // specified net injection
    double v = 1.0;          // |V| for PV and slack
    double q_lo = -1e300, q_hi = 1e300; // net injection band for PV switching
};

struct AcPfResult {
    Eigen::VectorXcd V;
    bool converged = false;
    int iterations = 0;
    int switched = 0;
    double mismatch = 0.0;
};

// Polar Newton with PV -> PQ switching.
AcPfResult solve_ac_pf(const Eigen::MatrixXcd &Y, std::vector<AcPfBus> buses, double tol = 1e-8, int max_iter = 30,
                       bool enforce_q_limits = true, const Eigen::VectorXcd *warm = nullptr);

// Real Newton on P_s = V_s sum_t G_st V_t; bus `slack` keeps v_slack.
Eigen::VectorXd solve_dc_pf(const Eigen::MatrixXd &G, const std::vector<double> &p, int slack, double v_slack,
                            double tol = 1e-8, int max_iter = 30, bool *converged = nullptr);

PfSolution sequential_acdc_pf(const NetworkCase &net, const PfSpec &spec);

// Every flow quantity implied by fixed voltages; residual collects the
// balance errors at buses without a generator and at the converters.
PfSolution evaluate_point(const NetworkCase &net, const std::vector<Eigen::VectorXcd> &V,
                          const std::vector<double> &wind_p, const std::vector<double> &wind_q);

// Participation-weighted redistribution of each AC grid's slack deviation, then one re-run.
PfSolution agc_redistribution(const NetworkCase &net, const PfSpec &spec, const PfSolution &pf, PfSpec *adjusted = nullptr);

// Set-points of the piecewise affine policy at realisation zeta.
struct PolicyPoint {
    PfSpec spec;
    Interpolation interp;
};
PolicyPoint apply_corrective_control(const NetworkCase &net, const OpfResult &result, const UncertaintyModel &model,
                                     const Eigen::VectorXd &zeta, PsiScheme scheme = PsiScheme::Facet);

// Set-points of one solved state, wind at forecast + zeta of that state.
PfSpec state_setpoints(const NetworkCase &net, const OpfResult &result, const OpfContext &ctx, int state);

struct Deadbands {
    double gen = 1e-3;      // p.u. on P_G and Q_G
    double relative = 1e-3; // fraction of the limit for V, S and converter limits
};

struct LimitCheck {
    double gen_p = 0.0, gen_q = 0.0, bus_v = 0.0, flow = 0.0, converter = 0.0; // worst excess beyond the dead-band
    bool violated_gen_p = false, violated_gen_q = false, violated_bus_v = false, violated_flow = false,
         violated_converter = false;
    bool any() const {
        return violated_gen_p || violated_gen_q || violated_bus_v || violated_flow || violated_converter;
    }
    double worst() const;
};

LimitCheck check_limits(const NetworkCase &net, const PfSolution &pf, const Deadbands &db);

// One table with bus, branch and converter records (unused columns left empty).
std::string pf_csv(const NetworkCase &net, const PfSolution &pf);

} // namespace ccopf

#endif

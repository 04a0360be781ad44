#include "ccopf/errors.hpp"
#include "ccopf/montecarlo.hpp"
#include "ccopf/opf.hpp"
#include "ccopf/powerflow.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <string>

using namespace ccopf;

namespace {

const std::string kData = CCOPF_DATA_DIR;

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd x(v.size());
    int i = 0;
    for (double d : v) x(i++) = d;
    return x;
}

double min_eig(const Eigen::MatrixXd &M) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(M, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

int count_ids(const ConstraintSet &cs, const std::string &prefix, const std::string &suffix) {
    int n = 0;
    auto match = [&](const std::string &id) {
        return id.rfind(prefix, 0) == 0 && id.size() >= suffix.size() &&
               id.compare(id.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    for (auto &l : cs.lmis()) n += match(l.id);
    for (auto &e : cs.equalities()) n += match(e.id);
    for (auto &e : cs.inequalities()) n += match(e.id);
    return n;
}

struct Case5 {
    NetworkCase net = load_case(kData + "/case5ac_3dc.json");
    UncertaintyModel model = box_model(vec({-0.4}), vec({0.5}));
};

// Shared solved 5-bus study
const OpfResult &case5_result(const OpfContext **ctx_out = nullptr) {
    static Case5 c;
    static OpfContext ctx = make_context(c.net, c.model);
    static OpfResult r = penalty_loop(ctx, OpfOptions{});
    if (ctx_out) *ctx_out = &ctx;
    return r;
}

} // namespace

TEST(Opf, ConverterQuadraticLossCoefficient) {
    Converter cv;
    cv.loss_c = 0.0069;
    cv.r_c = 0.0001;
    cv.x_c = 0.1643;
    EXPECT_DOUBLE_EQ(cv.z(), 0.0069 / (0.0001 * 0.0001 + 0.1643 * 0.1643));
}

TEST(Opf, FiveBusCensusHasOneFlowLmi) {
    Case5 c;
    OpfContext ctx = make_context(c.net, c.model);
    FormulationSpec spec;
    spec.states = {0};
    spec.mu = {0.0, 0.0};
    Formulation f(ctx, spec);
    EXPECT_EQ(count_ids(f.constraints(), "s0/", "/s"), 1);
    EXPECT_EQ(count_ids(f.constraints(), "s0/", "/current"), 1);
    EXPECT_EQ(count_ids(f.constraints(), "cost/", ""), 2);
    int cliques = 0, psd = 0;
    for (auto &cq : ctx.cliques) cliques += static_cast<int>(cq.cliques.size());
    for (auto &l : f.constraints().lmis()) psd += l.id.find("/psd/") != std::string::npos;
    EXPECT_EQ(psd, cliques);
}

TEST(Opf, LinearCostEpigraphWithoutQuadraticTerm) {
    Case5 c;
    for (Grid &g : c.net.grids)
        for (Generator &gen : g.generators) gen.c2 = 0.0;
    OpfContext ctx = make_context(c.net, c.model);
    FormulationSpec spec;
    spec.states = {0};
    spec.mu = {0.0, 0.0};
    Formulation f(ctx, spec);
    for (auto &l : f.constraints().lmis()) EXPECT_NE(l.id.rfind("cost/", 0), 0u) << l.id;
    int lin = 0;
    for (auto &e : f.constraints().inequalities()) lin += e.id.rfind("cost/", 0) == 0;
    EXPECT_EQ(lin, 2);
}

TEST(Opf, VertexStatesReplicateFamilies) {
    NetworkCase net = load_case(kData + "/acdc18.json");
    UncertaintyModel m = box_model(vec({-0.2, -0.3}), vec({0.2, 0.3}));
    ASSERT_EQ(m.n_vertices(), 4);
    OpfContext ctx = make_context(net, m);
    FormulationSpec spec;
    spec.states = {0, 1, 2, 3, 4};
    spec.mu.assign(4, 0.0);
    Formulation f(ctx, spec);
    const int lmis0 = count_ids(f.constraints(), "s0/", "");
    for (int s = 1; s <= 4; ++s) {
        const std::string p = "s" + std::to_string(s) + "/";
        // vertex states carry the forecast families plus one coupling row per generator
        EXPECT_EQ(count_ids(f.constraints(), p, "") - count_ids(f.constraints(), p + "couple/", ""), lmis0);
        EXPECT_EQ(count_ids(f.constraints(), p + "couple/", ""), 5);
    }
}

TEST(Opf, VertexNodalBalanceShiftsByZeta) {
    Case5 c;
    OpfContext ctx = make_context(c.net, c.model);
    FormulationSpec spec;
    spec.states = {0, 1, 2};
    spec.mu = {0.0, 0.0};
    Formulation f(ctx, spec);
    const int dc = c.net.grid_index(2);
    AffineExpr p0 = f.p_injection(0, dc, 2), p2 = f.p_injection(2, dc, 2);
    // vertex 2 is the upper bound 0.5: same structure, constant lowered by 0.5
    EXPECT_NEAR(p0.constant - p2.constant, 0.5, 1e-15);
    AffineExpr p1 = f.p_injection(1, dc, 2);
    EXPECT_NEAR(p0.constant - p1.constant, -0.4, 1e-15);
}

TEST(Opf, ZeroWidthBoxStaysAtForecastDispatch) {
    Case5 c;
    UncertaintyModel zero = box_model(vec({0.0}), vec({0.0}));
    OpfContext ctx = make_context(c.net, zero);
    OpfResult r = penalty_loop(ctx, OpfOptions{});
    ASSERT_TRUE(r.rank_ok);
    EXPECT_LE(r.iterations, 2);
    EXPECT_GE(r.delta_opt, 99.99);
    for (double g : r.gamma) EXPECT_LT(std::abs(g), 5e-3);
    for (size_t g = 0; g < r.states[0].pg.size(); ++g)
        for (int s = 1; s < ctx.n_states(); ++s) EXPECT_NEAR(r.states[s].pg[g], r.states[0].pg[g], 5e-3);
    EXPECT_NEAR(r.generation_cost, deterministic_cost(c.net, OpfOptions{}), 1e-4 * r.generation_cost);
}

TEST(Opf, PenaltyLoopOnFiveBusCase) {
    const OpfResult &r = case5_result();
    ASSERT_TRUE(r.rank_ok) << r.message;
    EXPECT_GE(r.delta_opt, 99.0);
    EXPECT_LE(r.delta_opt, 100.0);
    for (auto &st : r.states) EXPECT_GE(st.min_rho, 1e5);
    for (size_t i = 1; i < r.trace.size(); ++i)
        for (size_t v = 0; v < r.trace[i].mu.size(); ++v) EXPECT_GE(r.trace[i].mu[v], r.trace[i - 1].mu[v]);
    EXPECT_EQ(r.trace.front().mu, std::vector<double>(2, 0.0));
    EXPECT_NEAR(r.penalty, r.objective - r.generation_cost, 1e-9 * r.objective);
    double pen = 0.0;
    for (size_t v = 0; v < r.mu.size(); ++v) pen += r.mu[v] * r.gamma[v];
    EXPECT_NEAR(r.penalty, pen, 1e-5 * std::max(1.0, std::abs(pen)));
}

TEST(Opf, CouplingIdentityOnSolvedStates) {
    const OpfContext *ctx = nullptr;
    const OpfResult &r = case5_result(&ctx);
    const NetworkCase &net = *ctx->net;
    std::vector<double> d;
    for (const Grid &g : net.grids)
        for (const Generator &gen : g.generators) d.push_back(gen.participation);
    for (int s = 1; s < ctx->n_states(); ++s) {
        const double zs = ctx->zeta_sum(s), gamma = r.gamma[s - 1];
        double total = 0.0;
        for (size_t g = 0; g < d.size(); ++g) {
            const double dp = r.states[s].pg[g] - r.states[0].pg[g];
            EXPECT_NEAR(dp, d[g] * (gamma - zs), 1e-6);
            total += dp;
        }
        // total generation change plus wind change equals the change of all losses
        auto losses = [&](int state) {
            std::vector<double> wp, wq;
            for (size_t f = 0; f < net.wind_farms.size(); ++f) {
                wp.push_back(net.wind_farms[f].forecast + (state ? ctx->model.vertices[state - 1](f) : 0.0));
                wq.push_back(r.tau[f] * wp.back());
            }
            PfSolution ev = evaluate_point(net, r.states[state].V, wp, wq);
            double gen = 0.0, load = 0.0, wind = 0.0;
            for (double p : ev.pg) gen += p;
            for (const Grid &g : net.grids)
                for (const Bus &b : g.buses) load += b.p_load;
            for (double p : wp) wind += p;
            return gen + wind - load;
        };
        EXPECT_NEAR(total + zs, gamma, 1e-6);
        EXPECT_NEAR(losses(s) - losses(0), gamma, 1e-4);
    }
}

TEST(Opf, RecoveredStatesSatisfyNonlinearConstraints) {
    const OpfContext *ctx = nullptr;
    const OpfResult &r = case5_result(&ctx);
    const NetworkCase &net = *ctx->net;
    for (int s = 0; s < ctx->n_states(); ++s) {
        PfSpec sp = state_setpoints(net, r, *ctx, s);
        PfSolution pf = sequential_acdc_pf(net, sp);
        ASSERT_TRUE(pf.converged) << pf.message;
        LimitCheck lc = check_limits(net, pf, Deadbands{0.0, 0.0});
        EXPECT_LE(lc.worst(), 1e-5) << "state " << s;
        for (size_t g = 0; g < net.grids.size(); ++g)
            EXPECT_LE((pf.V[g] - r.states[s].V[g]).cwiseAbs().maxCoeff(), 1e-4) << "state " << s;
    }
}

TEST(Opf, RelaxationLowerBoundsRecoveredCost) {
    const OpfContext *ctx = nullptr;
    const OpfResult &r = case5_result(&ctx);
    EXPECT_LE(r.unpenalized_cost, r.generation_cost * (1 + 1e-7));
    EXPECT_LE(deterministic_cost(*ctx->net, OpfOptions{}), r.unpenalized_cost * (1 + 1e-7));
    PfSpec sp = state_setpoints(*ctx->net, r, *ctx, 0);
    PfSolution pf = sequential_acdc_pf(*ctx->net, sp);
    ASSERT_TRUE(pf.converged);
    ASSERT_LE(check_limits(*ctx->net, pf, Deadbands{0.0, 0.0}).worst(), 1e-5);
    EXPECT_GE(generation_cost(*ctx->net, pf.pg), deterministic_cost(*ctx->net, OpfOptions{}) * (1 - 1e-7));
}

TEST(Opf, EigRatioExamples) {
    Eigen::MatrixXd D = Eigen::Vector3d(1.0, 1e-3, 1e-8).asDiagonal();
    EXPECT_NEAR(eig_ratio(D), 1e5, 1e-3);
    Eigen::MatrixXd R = Eigen::Vector3d(1.0, 0.5, 0.0).asDiagonal();
    EXPECT_EQ(eig_ratio(R), kInfinity);
    Eigen::VectorXd x = vec({1.0, 0.2, -0.3, 0.4});
    Eigen::MatrixXd N = x * x.transpose() + 1e-9 * Eigen::MatrixXd::Identity(4, 4);
    EXPECT_NEAR(eig_ratio(N), 1.0, 1e-3);
    EXPECT_GT(eig_ratio_top(N), 1e8);
}

TEST(Opf, LiftIsHalfRealImagBlock) {
    Eigen::MatrixXcd H(2, 2);
    H << 2.0, cplx(1, 3), cplx(1, -3), 5.0;
    Eigen::MatrixXd L = lift_hermitian(H);
    EXPECT_DOUBLE_EQ(L(0, 1), 0.5);
    EXPECT_DOUBLE_EQ(L(2, 1), 0.5 * 3.0);
    EXPECT_DOUBLE_EQ(L(0, 3), -0.5 * 3.0);
    EXPECT_DOUBLE_EQ(L(3, 0), 0.5 * -3.0);
    EXPECT_DOUBLE_EQ(L(3, 3), 2.5);
}

TEST(Opf, RecoverSingleCliqueUpToReferenceRotation) {
    CliqueStructure cs = chordal_extension(3, {{0, 1}, {1, 2}, {0, 2}});
    Eigen::VectorXcd V(3);
    V << std::polar(1.02, 0.0), std::polar(0.97, -0.2), std::polar(1.01, 0.1);
    Eigen::VectorXcd rotated = V * std::polar(1.0, 0.7);
    Eigen::MatrixXcd H = rotated * rotated.adjoint();
    Eigen::VectorXcd got = recover_voltages(cs, {H}, 0, false);
    EXPECT_LE((got - V).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Opf, RecoverTwoCliquesFromKnownVector) {
    CliqueStructure cs = chordal_extension(4, {{0, 1}, {1, 2}, {2, 3}});
    Eigen::VectorXcd V(4);
    V << std::polar(1.0, 0.0), std::polar(0.98, -0.1), std::polar(1.03, 0.15), std::polar(0.96, -0.3);
    std::vector<Eigen::MatrixXcd> blocks;
    for (auto &c : cs.cliques) {
        Eigen::VectorXcd x(c.size());
        for (size_t i = 0; i < c.size(); ++i) x(i) = V(c[i]) * std::polar(1.0, 0.37 * (i + 1));
        // each block gets its own arbitrary phase, the way an SDP returns it
        Eigen::VectorXcd y(c.size());
        const cplx phase = std::polar(1.0, 1.1 * c[0]);
        for (size_t i = 0; i < c.size(); ++i) y(i) = V(c[i]) * phase;
        blocks.push_back(y * y.adjoint());
    }
    Eigen::VectorXcd got = recover_voltages(cs, blocks, 0, false);
    EXPECT_LE((got - V).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Opf, DcRecoveryRejectsImaginaryNoise) {
    CliqueStructure cs = chordal_extension(2, {{0, 1}}, false);
    Eigen::VectorXcd V(2);
    V << cplx(1.0, 0.0), cplx(0.99, 1e-5);
    EXPECT_THROW(recover_voltages(cs, {V * V.adjoint()}, 0, true), NumericError);
    V(1) = cplx(0.99, 0.0);
    Eigen::VectorXcd got = recover_voltages(cs, {V * V.adjoint()}, 0, true);
    EXPECT_NEAR(got(1).real(), 0.99, 1e-12);
    EXPECT_EQ(got(1).imag(), 0.0);
}

TEST(Opf, FlowAndCurrentLmiMatchScalarForms) {
    NetworkCase net = load_case(kData + "/acdc18.json");
    const Grid &g = net.grids[0];
    AuxiliaryMatrices aux = build_aux_matrices(g);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> mag(0.9, 1.1), ang(-0.4, 0.4), lim(0.05, 3.0);
    int feasible = 0, infeasible = 0;
    for (int t = 0; t < 1000; ++t) {
        Eigen::VectorXcd V(g.n());
        for (int i = 0; i < g.n(); ++i) V(i) = std::polar(mag(rng), ang(rng));
        Eigen::VectorXd x = lift_voltage(V);
        const int l = t % static_cast<int>(g.branches.size());
        const double P = aux.Ylm[l].quad(x), Q = aux.Ybarlm[l].quad(x), S = lim(rng);
        Eigen::Matrix3d M;
        M << S * S, P, Q, P, 1, 0, Q, 0, 1;
        const bool scalar = P * P + Q * Q <= S * S;
        if (std::abs(P * P + Q * Q - S * S) > 1e-9) {
            EXPECT_EQ(min_eig(M) >= -1e-12, scalar);
            (scalar ? feasible : infeasible)++;
        }
        // converter current: P^2 + Q^2 <= |V_k|^2 I^2
        const double Vk2 = std::norm(V(0)), I = lim(rng);
        Eigen::Matrix3d C;
        C << I * I * Vk2, P, Q, P, 1, 0, Q, 0, 1;
        if (std::abs(P * P + Q * Q - I * I * Vk2) > 1e-9) EXPECT_EQ(min_eig(C) >= -1e-12, P * P + Q * Q <= I * I * Vk2);
    }
    EXPECT_GT(feasible, 100);
    EXPECT_GT(infeasible, 100);
}

TEST(Opf, CostEpigraphLmiMatchesQuadratic) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 1000; ++t) {
        const double c2 = 50 * u(rng), c1 = 1000 * u(rng), c0 = 500 * u(rng), P = 3 * u(rng);
        const double cost = c2 * P * P + c1 * P + c0;
        const double alpha = cost + (u(rng) - 0.5) * 10;
        Eigen::Matrix2d M;
        M << alpha - c1 * P - c0, std::sqrt(c2) * P, std::sqrt(c2) * P, 1.0;
        if (std::abs(alpha - cost) > 1e-7) EXPECT_EQ(min_eig(M) >= -1e-12, alpha >= cost);
    }
}

TEST(Opf, InfeasibleCaseRaisesInfeasible) {
    Case5 c;
    for (Grid &g : c.net.grids)
        for (Generator &gen : g.generators) gen.p_max = 0.2;
    OpfContext ctx = make_context(c.net, c.model);
    FormulationSpec spec;
    spec.states = {0};
    spec.mu = {0.0, 0.0};
    EXPECT_THROW(solve_fixed(ctx, spec, SolverOptions{}), InfeasibleError);
}

TEST(Opf, PenaltyModeParsing) {
    EXPECT_EQ(parse_penalty_mode("loss"), PenaltyMode::ActiveLoss);
    EXPECT_EQ(parse_penalty_mode("qgen"), PenaltyMode::ReactivePower);
    EXPECT_THROW(parse_penalty_mode("both"), InputError);
}

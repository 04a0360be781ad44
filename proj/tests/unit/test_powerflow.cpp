#include "ccopf/errors.hpp"
#include "ccopf/matrix_builder.hpp"
#include "ccopf/opf.hpp"
#include "ccopf/powerflow.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <cmath>
#include <sstream>
#include <string>

using namespace ccopf;
using nlohmann::json;

namespace {

const std::string kData = CCOPF_DATA_DIR;

PfSpec case5_spec(const NetworkCase &net) {
    PfSpec s;
    s.pg = {1.7, 0.8};
    s.vg = {1.02, 1.01};
    s.pc = {0.0};
    s.qc = {0.05};
    s.vdc = {1.0};
    s.wind_p = {net.wind_farms[0].forecast};
    s.wind_q = {0.0};
    return s;
}

PfSpec flat_spec(const NetworkCase &net) {
    PfSpec s;
    for (const Grid &g : net.grids)
        for (size_t j = 0; j < g.generators.size(); ++j) {
            s.pg.push_back(0.0);
            s.vg.push_back(1.0);
        }
    for (size_t k = 0; k < net.converters.size(); ++k) {
        s.pc.push_back(0.0);
        s.qc.push_back(0.0);
        s.vdc.push_back(1.0);
    }
    for (const WindFarm &w : net.wind_farms) {
        s.wind_p.push_back(w.forecast);
        s.wind_q.push_back(0.0);
    }
    return s;
}

NetworkCase single_generator_case() {
    json j = json::parse(R"({
      "name": "one-gen", "base_mva": 100,
      "grids": [{
        "id": 1, "kind": "AC", "base_kv": 110, "slack_bus": 1,
        "buses": [{"id": 1, "pd": 0, "qd": 0, "vmin": 0.9, "vmax": 1.1},
                  {"id": 2, "pd": 0.6, "qd": 0.2, "vmin": 0.9, "vmax": 1.1},
                  {"id": 3, "pd": 0.3, "qd": 0.1, "vmin": 0.9, "vmax": 1.1}],
        "branches": [{"from": 1, "to": 2, "r": 0.01, "x": 0.1, "b": 0.02},
                     {"from": 2, "to": 3, "r": 0.02, "x": 0.08, "b": 0.01},
                     {"from": 1, "to": 3, "r": 0.01, "x": 0.12, "b": 0.0}],
        "generators": [{"bus": 1, "pmin": 0, "pmax": 3, "qmin": -2, "qmax": 2,
                        "cost": [0.1, 10, 0], "participation": 1.0}]
      }],
      "converters": [], "wind_farms": []
    })");
    return parse_case(j.dump());
}

// sum of generation and wind minus load, series losses, shunt and converter losses
double energy_imbalance(const NetworkCase &net, const PfSolution &pf) {
    double in = 0.0, out = 0.0;
    for (double p : pf.pg) in += p;
    for (double p : pf.wind_p) in += p;
    for (size_t gi = 0; gi < net.grids.size(); ++gi) {
        const Grid &g = net.grids[gi];
        const Eigen::VectorXcd &V = pf.V[gi];
        for (int b = 0; b < g.n(); ++b) out += g.buses[b].p_load + g.buses[b].g_shunt * std::norm(V(b));
        for (const Branch &br : g.branches) {
            const cplx vl = V(br.from - 1), vm = V(br.to - 1);
            out += std::norm((vl - vm) / cplx(br.r, br.x)) * br.r;
        }
    }
    for (double l : pf.loss) out += l;
    return in - out;
}

const OpfResult &case5_policy(const OpfContext **ctx_out) {
    static NetworkCase net = load_case(kData + "/case5ac_3dc.json");
    static OpfContext ctx = [] {
        Eigen::VectorXd lo(1), hi(1);
        lo << -0.4;
        hi << 0.5;
        return make_context(net, box_model(lo, hi));
    }();
    static OpfResult r = penalty_loop(ctx, OpfOptions{});
    *ctx_out = &ctx;
    return r;
}

} // namespace

TEST(PowerFlow, SlackOnlyNetworkIsFlat) {
    Eigen::MatrixXcd Y(2, 2);
    Y << cplx(0, -10), cplx(0, 10), cplx(0, 10), cplx(0, -10);
    std::vector<AcPfBus> buses(2);
    buses[0].type = AcPfBus::Slack;
    AcPfResult r = solve_ac_pf(Y, buses);
    ASSERT_TRUE(r.converged);
    EXPECT_NEAR(std::abs(r.V(0) - 1.0), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(r.V(1) - 1.0), 0.0, 1e-12);
    EXPECT_LE(std::abs((Y * r.V)(0)), 1e-12);
}

TEST(PowerFlow, TwoBusMatchesFixedPointOracle) {
    const cplx y(0.0, -10.0); // x = 0.1
    Eigen::MatrixXcd Y(2, 2);
    Y << y, -y, -y, y;
    std::vector<AcPfBus> buses(2);
    buses[0].type = AcPfBus::Slack;
    buses[1].p = -0.1;
    AcPfResult r = solve_ac_pf(Y, buses, 1e-13);
    ASSERT_TRUE(r.converged);

    // V2 = (conj(S2 / V2) - Y21 V1) / Y22, damped
    cplx v2 = 1.0;
    const cplx s2(-0.1, 0.0);
    for (int it = 0; it < 500; ++it) {
        const cplx next = (std::conj(s2 / v2) - Y(1, 0) * 1.0) / Y(1, 1);
        v2 = 0.5 * v2 + 0.5 * next;
    }
    EXPECT_LE(std::abs(r.V(1) - v2), 1e-10);
}

TEST(PowerFlow, PvBusAtReactiveLimitIsRetyped) {
    const cplx y(1.0, -10.0);
    Eigen::MatrixXcd Y(2, 2);
    Y << y, -y, -y, y;
    std::vector<AcPfBus> buses(2);
    buses[0].type = AcPfBus::Slack;
    buses[1].type = AcPfBus::PV;
    buses[1].v = 1.08;
    buses[1].p = 0.2;
    buses[1].q_lo = -0.5;
    buses[1].q_hi = 0.3;
    AcPfResult r = solve_ac_pf(Y, buses, 1e-10);
    ASSERT_TRUE(r.converged);
    EXPECT_EQ(r.switched, 1);
    const cplx S = r.V(1) * std::conj((Y * r.V)(1));
    EXPECT_NEAR(S.imag(), 0.3, 1e-9);
    EXPECT_LT(std::abs(r.V(1)), 1.08);

    AcPfResult free = solve_ac_pf(Y, buses, 1e-10, 30, false);
    ASSERT_TRUE(free.converged);
    EXPECT_EQ(free.switched, 0);
    EXPECT_NEAR(std::abs(free.V(1)), 1.08, 1e-12);
}

TEST(PowerFlow, DcNewtonBalancesInjections) {
    Eigen::MatrixXd G(3, 3);
    G << 200, -100, -100, -100, 200, -100, -100, -100, 200;
    std::vector<double> p = {0.0, -0.4, 0.3};
    bool ok = false;
    Eigen::VectorXd V = solve_dc_pf(G, p, 0, 1.0, 1e-12, 30, &ok);
    ASSERT_TRUE(ok);
    EXPECT_DOUBLE_EQ(V(0), 1.0);
    for (int s = 1; s < 3; ++s) EXPECT_NEAR(V(s) * G.row(s).dot(V), p[s], 1e-11);
}

TEST(PowerFlow, ConverterLossAtUnitCurrent) {
    NetworkCase net = load_case(kData + "/case5ac_3dc.json");
    const Converter &cv = net.converters[0];
    std::vector<Eigen::VectorXcd> V;
    for (const Grid &g : net.grids) V.push_back(Eigen::VectorXcd::Ones(g.n()));
    // a reactor drop of |z_c| drives exactly 1 p.u. of current
    V[0](cv.filter_bus - 1) = 1.0 + std::abs(cplx(cv.r_c, cv.x_c));
    PfSolution ev = evaluate_point(net, V, {1.0}, {0.0});
    EXPECT_NEAR(ev.current[0], 1.0, 1e-12);
    EXPECT_NEAR(ev.loss[0], 0.0110 + 0.0069, 1e-12);
}

TEST(PowerFlow, ConverterBalanceHoldsAfterSolve) {
    for (const char *f : {"/case5ac_3dc.json", "/acdc18.json"}) {
        NetworkCase net = load_case(kData + f);
        PfSpec s = flat_spec(net);
        int gg = 0;
        for (const Grid &g : net.grids)
            for (const Generator &gen : g.generators) s.pg[gg++] = 0.5 * (gen.p_min + gen.p_max) * 0.6;
        PfSolution pf = sequential_acdc_pf(net, s);
        ASSERT_TRUE(pf.converged) << f << ": " << pf.message;
        for (size_t k = 0; k < net.converters.size(); ++k) {
            const Converter &cv = net.converters[k];
            EXPECT_NEAR(pf.pcs[k], -(pf.pc[k] + cv.loss_a + cv.loss_c * pf.current[k] * pf.current[k]), 1e-8) << f;
            EXPECT_GE(pf.loss[k], cv.loss_a);
        }
    }
}

TEST(PowerFlow, IdleSystemLosesOnlyConverterConstants) {
    json j = json::parse(serialize_case(load_case(kData + "/case5ac_3dc.json")));
    for (auto &g : j["grids"]) {
        for (auto &b : g["buses"]) b["pd"] = b["qd"] = 0.0;
        for (auto &br : g["branches"]) br["b"] = 0.0;
    }
    for (auto &c : j["converters"]) c["bf"] = 0.0;
    j["wind_farms"] = json::array();
    NetworkCase net = parse_case(j.dump());
    PfSpec s = flat_spec(net);
    PfSolution pf = sequential_acdc_pf(net, s);
    ASSERT_TRUE(pf.converged) << pf.message;
    const Converter &cv = net.converters[0];
    EXPECT_NEAR(pf.loss[0], cv.loss_a, 1e-6);
    const Eigen::VectorXcd &dc = pf.V[net.grid_index(cv.dc_grid)];
    EXPECT_LE((dc.array() - 1.0).abs().maxCoeff(), 1e-12);
    EXPECT_LE((pf.V[0].cwiseAbs().array() - 1.0).abs().maxCoeff(), 1e-3);
    double gen = 0.0;
    for (double p : pf.pg) gen += p;
    EXPECT_NEAR(gen, cv.loss_a, 1e-5);
}

TEST(PowerFlow, EnergyIsConserved) {
    for (const char *f : {"/case5ac_3dc.json", "/acdc18.json"}) {
        NetworkCase net = load_case(kData + f);
        PfSpec s = flat_spec(net);
        int gg = 0;
        for (const Grid &g : net.grids)
            for (const Generator &gen : g.generators) s.pg[gg++] = 0.3 * gen.p_max;
        PfSolution pf = sequential_acdc_pf(net, s);
        ASSERT_TRUE(pf.converged) << f;
        EXPECT_LE(std::abs(energy_imbalance(net, pf)), 1e-7) << f;
    }
}

TEST(PowerFlow, ConvergedSolutionBalancesEveryBus) {
    NetworkCase net = load_case(kData + "/acdc18.json");
    PfSpec s = flat_spec(net);
    int gg = 0;
    for (const Grid &g : net.grids)
        for (const Generator &gen : g.generators) s.pg[gg++] = 0.3 * gen.p_max;
    PfSolution pf = sequential_acdc_pf(net, s);
    ASSERT_TRUE(pf.converged);
    EXPECT_LE(pf.residual, 1e-8);
    // independent check at buses without generators or converters
    for (size_t gi = 0; gi < net.grids.size(); ++gi) {
        const Grid &g = net.grids[gi];
        Eigen::MatrixXcd Y = build_bus_admittance(g);
        Eigen::VectorXcd S = pf.V[gi].cwiseProduct((Y * pf.V[gi]).conjugate());
        for (int b = 0; b < g.n(); ++b) {
            if (g.generator_at(b + 1) >= 0 || net.converter_at(g.id, b + 1) >= 0) continue;
            const int w = net.wind_at(g.id, b + 1);
            const double wp = w < 0 ? 0.0 : pf.wind_p[w], wq = w < 0 ? 0.0 : pf.wind_q[w];
            EXPECT_NEAR(S(b).real(), wp - g.buses[b].p_load, 1e-8);
            if (g.kind == GridKind::AC) EXPECT_NEAR(S(b).imag(), wq - g.buses[b].q_load, 1e-8);
        }
    }
}

TEST(PowerFlow, ExcessiveLoadReportsNonConvergence) {
    NetworkCase net = single_generator_case();
    net.grids[0].buses[2].p_load = 40.0;
    PfSpec s = flat_spec(net);
    PfSolution pf = sequential_acdc_pf(net, s);
    EXPECT_FALSE(pf.converged);
    EXPECT_FALSE(pf.message.empty());
    EXPECT_THROW(agc_redistribution(net, s, pf), NumericError);
}

TEST(PowerFlow, MismatchedSetPointsAreRejected) {
    NetworkCase net = load_case(kData + "/case5ac_3dc.json");
    PfSpec s = case5_spec(net);
    s.pc.clear();
    EXPECT_THROW(sequential_acdc_pf(net, s), InputError);
}

TEST(Agc, ZeroMismatchIsIdentity) {
    NetworkCase net = single_generator_case();
    PfSpec s = flat_spec(net);
    PfSolution pf = sequential_acdc_pf(net, s);
    ASSERT_TRUE(pf.converged);
    pf.slack_dev.assign(1, 0.0);
    PfSpec adj;
    PfSolution again = agc_redistribution(net, s, pf, &adj);
    EXPECT_EQ(adj.pg, s.pg);
    EXPECT_LE((again.V[0] - pf.V[0]).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Agc, SingleGeneratorRemovesSlackDeviation) {
    NetworkCase net = single_generator_case();
    PfSpec s = flat_spec(net);
    PfSolution pf = sequential_acdc_pf(net, s);
    ASSERT_TRUE(pf.converged);
    EXPECT_GT(std::abs(pf.slack_dev[0]), 0.5);
    PfSolution after = agc_redistribution(net, s, pf);
    ASSERT_TRUE(after.converged);
    EXPECT_LE(std::abs(after.slack_dev[0]), 1e-6);
}

TEST(Agc, IncrementsFollowParticipation) {
    NetworkCase net = load_case(kData + "/case5ac_3dc.json");
    net.grids[0].generators[0].participation = 0.7;
    net.grids[0].generators[1].participation = 0.3;
    PfSpec s = case5_spec(net);
    PfSolution pf = sequential_acdc_pf(net, s);
    ASSERT_TRUE(pf.converged);
    pf.slack_dev[0] = 0.1;
    PfSpec adj;
    agc_redistribution(net, s, pf, &adj);
    EXPECT_NEAR(adj.pg[0] - s.pg[0], 0.07, 1e-15);
    EXPECT_NEAR(adj.pg[1] - s.pg[1], 0.03, 1e-15);
}

TEST(Agc, SlackDeviationDoesNotGrow) {
    NetworkCase net = load_case(kData + "/acdc18.json");
    PfSpec s = flat_spec(net);
    int gg = 0;
    for (const Grid &g : net.grids)
        for (const Generator &gen : g.generators) s.pg[gg++] = 0.3 * gen.p_max;
    PfSolution pf = sequential_acdc_pf(net, s);
    ASSERT_TRUE(pf.converged);
    PfSolution after = agc_redistribution(net, s, pf);
    ASSERT_TRUE(after.converged);
    for (size_t g = 0; g < pf.slack_dev.size(); ++g)
        EXPECT_LE(std::abs(after.slack_dev[g]), std::abs(pf.slack_dev[g]) + 1e-12);
}

TEST(Policy, ForecastAndVertexReproduceStates) {
    const OpfContext *ctx = nullptr;
    const OpfResult &r = case5_policy(&ctx);
    ASSERT_TRUE(r.rank_ok);
    const NetworkCase &net = *ctx->net;
    for (int s = 0; s < ctx->n_states(); ++s) {
        Eigen::VectorXd z = s == 0 ? Eigen::VectorXd::Zero(1) : ctx->model.vertices[s - 1];
        PolicyPoint pp = apply_corrective_control(net, r, ctx->model, z);
        PfSpec st = state_setpoints(net, r, *ctx, s);
        EXPECT_FALSE(pp.interp.clamped);
        for (size_t g = 0; g < st.pg.size(); ++g) {
            EXPECT_NEAR(pp.spec.pg[g], st.pg[g], 1e-12);
            EXPECT_NEAR(pp.spec.vg[g], st.vg[g], 1e-12);
        }
        EXPECT_NEAR(pp.spec.pc[0], r.states[s].pc[0], 1e-12);
        EXPECT_NEAR(pp.spec.qc[0], r.states[s].qc[0], 1e-12);
        EXPECT_NEAR(pp.spec.wind_p[0], net.wind_farms[0].forecast + z(0), 1e-15);
    }
}

TEST(Policy, MidRayIsOnTheSegment) {
    const OpfContext *ctx = nullptr;
    const OpfResult &r = case5_policy(&ctx);
    const NetworkCase &net = *ctx->net;
    for (int v = 0; v < ctx->model.n_vertices(); ++v)
        for (double t : {0.25, 0.5, 0.8}) {
            Eigen::VectorXd z = t * ctx->model.vertices[v];
            PolicyPoint pp = apply_corrective_control(net, r, ctx->model, z);
            const double pc0 = r.states[0].pc[0], pcv = r.states[v + 1].pc[0];
            EXPECT_NEAR(pp.spec.pc[0], pc0 + t * (pcv - pc0), 1e-12);
            const double g0 = r.states[0].pg[0];
            const double d = net.grids[0].generators[0].participation;
            EXPECT_NEAR(pp.spec.pg[0], g0 + d * (t * r.gamma[v] - z.sum()), 1e-12);
        }
}

TEST(Policy, OutsideBoxIsClampedAndFlagged) {
    const OpfContext *ctx = nullptr;
    const OpfResult &r = case5_policy(&ctx);
    Eigen::VectorXd z(1);
    z << 0.9;
    PolicyPoint pp = apply_corrective_control(*ctx->net, r, ctx->model, z);
    EXPECT_TRUE(pp.interp.clamped);
    EXPECT_NEAR(pp.spec.pc[0], r.states[2].pc[0], 1e-12);
    EXPECT_NEAR(pp.spec.wind_p[0], ctx->net->wind_farms[0].forecast + 0.9, 1e-15);
}

TEST(PowerFlow, CsvHasOneRecordPerElement) {
    NetworkCase net = load_case(kData + "/case5ac_3dc.json");
    PfSolution pf = sequential_acdc_pf(net, case5_spec(net));
    ASSERT_TRUE(pf.converged);
    std::istringstream in(pf_csv(net, pf));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "record,grid,index,from,to,vm,va_deg,p,q,s,loss");
    int buses = 0, branches = 0, conv = 0;
    while (std::getline(in, line)) {
        buses += line.rfind("bus,", 0) == 0;
        branches += line.rfind("branch,", 0) == 0;
        conv += line.rfind("converter,", 0) == 0;
        EXPECT_EQ(std::count(line.begin(), line.end(), ','), 10) << line;
    }
    int nb = 0, nl = 0;
    for (const Grid &g : net.grids) {
        nb += g.n();
        nl += static_cast<int>(g.branches.size());
    }
    EXPECT_EQ(buses, nb);
    EXPECT_EQ(branches, nl);
    EXPECT_EQ(conv, 1);
}

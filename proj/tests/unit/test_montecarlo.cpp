#include "ccopf/errors.hpp"
#include "ccopf/montecarlo.hpp"
#include "ccopf/opf.hpp"
#include "ccopf/uncertainty.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>

using namespace ccopf;

namespace {

const std::string kData = CCOPF_DATA_DIR;

struct Study {
    NetworkCase net = load_case(kData + "/case5ac_3dc.json");
    OpfContext ctx;
    OpfResult res;

    Study() {
        Eigen::VectorXd lo(1), hi(1);
        lo << -0.4;
        hi << 0.5;
        ctx = make_context(net, box_model(lo, hi));
        res = penalty_loop(ctx, OpfOptions{});
    }
};

const Study &study() {
    static Study s;
    return s;
}

Eigen::MatrixXd grid_samples(double lo, double hi, int n) {
    Eigen::MatrixXd z(n, 1);
    for (int i = 0; i < n; ++i) z(i, 0) = lo + (hi - lo) * i / (n - 1);
    return z;
}

} // namespace

TEST(MonteCarlo, NoSamplesNoViolations) {
    const Study &s = study();
    McReport r = run_monte_carlo(s.net, s.res, s.ctx.model, Eigen::MatrixXd(0, 1), McOptions{});
    EXPECT_EQ(r.samples, 0);
    EXPECT_EQ(r.violations, 0);
    EXPECT_EQ(r.eps_emp, 0.0);
    EXPECT_TRUE(r.valid);
}

TEST(MonteCarlo, WrongColumnCountIsRejected) {
    const Study &s = study();
    EXPECT_THROW(run_monte_carlo(s.net, s.res, s.ctx.model, Eigen::MatrixXd::Zero(3, 2), McOptions{}), InputError);
}

TEST(MonteCarlo, ForecastRealisationIsClean) {
    const Study &s = study();
    ASSERT_TRUE(s.res.rank_ok);
    McReport r = run_monte_carlo(s.net, s.res, s.ctx.model, Eigen::MatrixXd::Zero(4, 1), McOptions{});
    EXPECT_EQ(r.violations, 0);
    EXPECT_EQ(r.clamped, 0);
    EXPECT_EQ(r.nonconverged, 0);
}

TEST(MonteCarlo, InsideBoxHoldsUnderDeadbands) {
    const Study &s = study();
    McReport r = run_monte_carlo(s.net, s.res, s.ctx.model, grid_samples(-0.4, 0.5, 19), McOptions{});
    EXPECT_EQ(r.clamped, 0);
    EXPECT_EQ(r.nonconverged, 0);
    EXPECT_EQ(r.violations, 0);
}

TEST(MonteCarlo, TightVoltageCeilingViolatesEverySample) {
    const Study &s = study();
    NetworkCase tight = s.net;
    for (Grid &g : tight.grids)
        for (Bus &b : g.buses) b.v_max = 0.5;
    McReport r = run_monte_carlo(tight, s.res, s.ctx.model, grid_samples(-0.3, 0.3, 7), McOptions{});
    EXPECT_EQ(r.violations, 7);
    EXPECT_DOUBLE_EQ(r.eps_emp, 1.0);
    EXPECT_DOUBLE_EQ(r.p_bus_v, 1.0);
}

TEST(MonteCarlo, OverloadedSystemCountsAsViolation) {
    const Study &s = study();
    NetworkCase heavy = s.net;
    for (Bus &b : heavy.grids[0].buses) b.p_load *= 40.0;
    McReport r = run_monte_carlo(heavy, s.res, s.ctx.model, Eigen::MatrixXd::Zero(2, 1), McOptions{});
    EXPECT_EQ(r.nonconverged, 2);
    EXPECT_EQ(r.violations, 2);
    EXPECT_FALSE(r.valid);
}

TEST(MonteCarlo, OutsideBoxIsClamped) {
    const Study &s = study();
    Eigen::MatrixXd z(3, 1);
    z << -0.9, 0.0, 0.95;
    McReport r = run_monte_carlo(s.net, s.res, s.ctx.model, z, McOptions{});
    EXPECT_EQ(r.clamped, 2);
    EXPECT_FALSE(r.outcomes[1].clamped);
}

TEST(MonteCarlo, JointRateBoundsEachFamily) {
    const Study &s = study();
    NetworkCase tight = s.net;
    tight.grids[0].generators[0].p_max = s.res.states[0].pg[0] + 0.05;
    McReport r = run_monte_carlo(tight, s.res, s.ctx.model, grid_samples(-0.4, 0.5, 31), McOptions{});
    for (double p : {r.p_gen_p, r.p_gen_q, r.p_bus_v, r.p_flow, r.p_converter}) EXPECT_LE(p, r.eps_emp);
    EXPECT_LE(r.eps_emp, r.p_gen_p + r.p_gen_q + r.p_bus_v + r.p_flow + r.p_converter + 1e-15);
    EXPECT_GT(r.p_gen_p, 0.0);
    EXPECT_LT(r.p_gen_p, 1.0);
}

TEST(MonteCarlo, ThreadCountDoesNotChangeOutcome) {
    const Study &s = study();
    Eigen::MatrixXd z = grid_samples(-0.6, 0.7, 23);
    McOptions one, many;
    many.jobs = 4;
    McReport a = run_monte_carlo(s.net, s.res, s.ctx.model, z, one);
    McReport b = run_monte_carlo(s.net, s.res, s.ctx.model, z, many);
    EXPECT_EQ(sample_csv(a), sample_csv(b));
    EXPECT_EQ(a.violations, b.violations);
}

TEST(MonteCarlo, SampleCsvLayout) {
    const Study &s = study();
    McReport r = run_monte_carlo(s.net, s.res, s.ctx.model, grid_samples(-0.2, 0.2, 5), McOptions{});
    std::istringstream in(sample_csv(r));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "sample,converged,clamped,violated,gen_p,gen_q,bus_v,flow,converter");
    int rows = 0;
    while (std::getline(in, line)) {
        EXPECT_EQ(line.rfind(std::to_string(rows) + ",1,0,", 0), 0u) << line;
        ++rows;
    }
    EXPECT_EQ(rows, 5);
}

TEST(CostOfUncertainty, PercentAboveDeterministic) {
    EXPECT_NEAR(cost_of_uncertainty(1.0394 * 2500.0, 2500.0), 3.94, 1e-10);
    EXPECT_DOUBLE_EQ(cost_of_uncertainty(100.0, 100.0), 0.0);
    EXPECT_THROW(cost_of_uncertainty(1.0, 0.0), InputError);
}

TEST(CostOfUncertainty, ChanceConstrainedCostExceedsDeterministic) {
    const Study &s = study();
    const double det = deterministic_cost(s.net, OpfOptions{});
    EXPECT_GT(cost_of_uncertainty(s.res.generation_cost, det), 0.0);
    EXPECT_LT(cost_of_uncertainty(s.res.generation_cost, det), 1.0);
}

TEST(TuneBeta, LargerBetaNestsBoxes) {
    const Study &s = study();
    CopulaSpec cs;
    cs.forecast = {1.0};
    cs.rated = {2.0};
    cs.sigma = {0.15};
    cs.correlation = Eigen::MatrixXd::Identity(1, 1);
    Eigen::MatrixXd train = generate_copula_samples(cs, required_sample_count(0.05, 1e-3, 1), 21);
    Eigen::MatrixXd valid = generate_copula_samples(cs, 400, 22);
    UncertaintyModel base = build_rect_set(train, 0.05, 1e-3);
    const double det = deterministic_cost(s.net, OpfOptions{});
    std::vector<BetaRow> rows = tune_beta(s.net, base, {1e-3, 0.1, 0.5}, OpfOptions{}, valid, McOptions{}, det);
    ASSERT_EQ(rows.size(), 3u);
    for (const BetaRow &r : rows) {
        ASSERT_TRUE(r.ok) << r.error;
        EXPECT_GT(r.generation_cost, det);
        EXPECT_NEAR(r.cou, cost_of_uncertainty(r.generation_cost, det), 1e-12);
    }
    EXPECT_EQ(rows[0].kept_samples, train.rows());
    for (size_t i = 1; i < rows.size(); ++i) {
        EXPECT_LT(rows[i].kept_samples, rows[i - 1].kept_samples);
        EXPECT_GE(rows[i].lower(0), rows[i - 1].lower(0));
        EXPECT_LE(rows[i].upper(0), rows[i - 1].upper(0));
    }
}

TEST(TuneBeta, BadScheduleEntryIsReportedNotThrown) {
    const Study &s = study();
    CopulaSpec cs;
    cs.forecast = {1.0};
    cs.rated = {2.0};
    cs.sigma = {0.15};
    cs.correlation = Eigen::MatrixXd::Identity(1, 1);
    Eigen::MatrixXd train = generate_copula_samples(cs, required_sample_count(0.05, 1e-3, 1), 3);
    UncertaintyModel base = build_rect_set(train, 0.05, 1e-3);
    std::vector<BetaRow> rows = tune_beta(s.net, base, {1e-4}, OpfOptions{}, Eigen::MatrixXd(0, 1), McOptions{}, 1.0);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_FALSE(rows[0].ok);
    EXPECT_FALSE(rows[0].error.empty());
}

#include "ccopf/config.hpp"
#include "ccopf/errors.hpp"
#include "ccopf/report.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <cmath>
#include <string>

using namespace ccopf;

namespace {

const std::string kData = CCOPF_DATA_DIR;

RunConfig minimal() {
    RunConfig c;
    c.case_path = kData + "/case5ac_3dc.json";
    return c;
}

} // namespace

TEST(Config, DefaultsWhenEmpty) {
    RunConfig c = parse_config("{}");
    EXPECT_DOUBLE_EQ(c.epsilon, 0.05);
    EXPECT_DOUBLE_EQ(c.beta, 1e-3);
    EXPECT_EQ(c.penalty, PenaltyMode::ActiveLoss);
    EXPECT_EQ(c.psi, PsiScheme::Facet);
    EXPECT_EQ(c.mc_samples, 10000);
    EXPECT_EQ(c.seed, 12345u);
    EXPECT_FALSE(c.mu.has_value());
}

TEST(Config, UnknownKeyIsRejected) {
    EXPECT_THROW(parse_config(R"({"epsilon": 0.1, "epsilom": 0.2})"), InputError);
}

TEST(Config, WrongTypeIsRejected) {
    EXPECT_THROW(parse_config(R"({"epsilon": "small"})"), InputError);
    EXPECT_THROW(parse_config("[1, 2]"), InputError);
    EXPECT_THROW(parse_config("{"), InputError);
}

TEST(Config, RelativePathsFollowTheConfigDirectory) {
    RunConfig c = parse_config(R"({"case": "grids/a.json", "samples": "/abs/s.csv", "out": "../out"})", "/base/dir");
    EXPECT_EQ(c.case_path, "/base/dir/grids/a.json");
    EXPECT_EQ(c.samples_path, "/abs/s.csv");
    EXPECT_EQ(c.out_dir, "/base/out");
}

TEST(Config, BundledStudyLoads) {
    RunConfig c = load_config(kData + "/acdc18_study.json");
    EXPECT_NO_THROW(validate_config(c));
    EXPECT_EQ(c.beta_schedule.size(), 4u);
    EXPECT_EQ(c.correlation.rows(), 2);
    EXPECT_DOUBLE_EQ(c.correlation(0, 1), 0.6);
}

TEST(Config, RangeChecksNameTheField) {
    RunConfig c = minimal();
    EXPECT_NO_THROW(validate_config(c));
    c.epsilon = 1.5;
    try {
        validate_config(c);
        FAIL() << "expected InputError";
    } catch (const InputError &e) {
        EXPECT_NE(std::string(e.what()).find("epsilon"), std::string::npos);
    }
    c = minimal();
    c.beta_schedule = {1e-4};
    EXPECT_THROW(validate_config(c), InputError);
    c = minimal();
    c.jobs = 0;
    EXPECT_THROW(validate_config(c), InputError);
    c = minimal();
    c.case_path = kData + "/missing.json";
    EXPECT_THROW(validate_config(c), InputError);
}

TEST(Config, EchoRoundTripsAndIsStable) {
    RunConfig c = load_config(kData + "/acdc18_study.json");
    const std::string a = config_json(c);
    EXPECT_EQ(a, config_json(load_config(kData + "/acdc18_study.json")));
    RunConfig back = parse_config(a);
    EXPECT_EQ(config_json(back), a);
}

TEST(Config, OptionsCarryOver) {
    RunConfig c = minimal();
    c.delta_mu = 10;
    c.penalty = PenaltyMode::ReactivePower;
    c.jobs = 3;
    c.benders_tol = 1e-3;
    c.psi = PsiScheme::OrthantProduct;
    EXPECT_DOUBLE_EQ(opf_options(c).delta_mu, 10);
    EXPECT_EQ(opf_options(c).mode, PenaltyMode::ReactivePower);
    EXPECT_EQ(opf_options(c).jobs, 3);
    EXPECT_DOUBLE_EQ(benders_options(c).tol, 1e-3);
    EXPECT_EQ(mc_options(c).psi, PsiScheme::OrthantProduct);
}

TEST(Config, NoSamplesGivesZeroWidthBox) {
    RunConfig c = minimal();
    NetworkCase net = load_case(c.case_path);
    UncertaintyModel m = study_model(net, c);
    EXPECT_EQ(m.n_w, 1);
    EXPECT_DOUBLE_EQ(m.lower(0), 0.0);
    EXPECT_DOUBLE_EQ(m.upper(0), 0.0);
}

TEST(Config, ValidationDrawsFollowTheSeed) {
    RunConfig c = minimal();
    c.mc_samples = 50;
    NetworkCase net = load_case(c.case_path);
    Eigen::MatrixXd a = validation_errors(net, c), b = validation_errors(net, c);
    ASSERT_EQ(a.rows(), 50);
    EXPECT_EQ(a, b);
    c.seed = 1;
    EXPECT_NE(a, validation_errors(net, c));
    c.sigma = {0.1, 0.2};
    EXPECT_THROW(validation_errors(net, c), InputError);
}

TEST(Report, McReportFieldsAndCompliance) {
    McReport r;
    r.samples = 200;
    r.violations = 4;
    r.eps_emp = 0.02;
    McSummary s{100.0, 103.0, 0.05, 7};
    nlohmann::json j = nlohmann::json::parse(mc_report(r, s));
    EXPECT_EQ(j["samples"], 200);
    EXPECT_EQ(j["seed"], 7);
    EXPECT_EQ(j["compliant"], true);
    EXPECT_NEAR(j["cost_of_uncertainty_percent"].get<double>(), 3.0, 1e-12);
    s.deterministic_cost = 0.0;
    EXPECT_TRUE(nlohmann::json::parse(mc_report(r, s))["cost_of_uncertainty_percent"].is_null());
}

TEST(Report, BetaTableEscapesErrors) {
    BetaRow ok;
    ok.beta_star = 0.025;
    ok.kept_samples = 300;
    ok.lower = Eigen::Vector2d(-0.1, -0.2);
    ok.upper = Eigen::Vector2d(0.3, 0.4);
    BetaRow bad;
    bad.beta_star = 1e-4;
    bad.ok = false;
    bad.error = "below beta, try again\nlater";
    const std::string csv = beta_table_csv({ok, bad});
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "beta_star,kept_samples,eps_emp,cost_of_uncertainty,generation_cost,penalty_iterations,ok,lower,upper,error");
    EXPECT_NE(csv.find("0.025000000000000001,300,"), std::string::npos);
    EXPECT_NE(csv.find("-0.10000000000000001;-0.20000000000000001"), std::string::npos);
    EXPECT_NE(csv.find("below beta  try again later"), std::string::npos);
    int lines = 0;
    for (char ch : csv) lines += ch == '\n';
    EXPECT_EQ(lines, 3);
}

TEST(Report, RhoTraceWritesInfinity) {
    OpfResult r;
    PenaltyIteration it;
    it.iteration = 1;
    it.mu = {25.0};
    it.min_rho = {kInfinity, 1e6};
    r.trace.push_back(it);
    EXPECT_EQ(rho_trace_csv(r), "iteration,state,mu,min_rho,generation_cost,penalty\n1,0,,inf,0,0\n1,1,25,1000000,0,0\n");
}

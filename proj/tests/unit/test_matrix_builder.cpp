#include "ccopf/grid_model.hpp"
#include "ccopf/matrix_builder.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>

using namespace ccopf;

namespace {

const std::string kData = CCOPF_DATA_DIR;

Grid line_grid(cplx y, double b) {
    Grid g;
    g.id = 1;
    g.buses.resize(2);
    g.buses[0].id = 1;
    g.buses[1].id = 2;
    Branch br;
    br.from = 1;
    br.to = 2;
    const cplx z = 1.0 / y;
    br.r = z.real();
    br.x = z.imag();
    br.b = b;
    g.branches.push_back(br);
    return g;
}

Eigen::VectorXcd random_voltage(int n, std::mt19937_64 &rng, bool dc) {
    std::uniform_real_distribution<double> mag(0.85, 1.15), ang(-0.6, 0.6);
    Eigen::VectorXcd V(n);
    for (int i = 0; i < n; ++i) V(i) = dc ? cplx(mag(rng), 0.0) : std::polar(mag(rng), ang(rng));
    return V;
}

// Y assembled entry by entry from the branch list
Eigen::MatrixXcd admittance_oracle(const Grid &g) {
    const int n = g.n();
    Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
    for (int k = 0; k < n; ++k) Y(k, k) += cplx(g.buses[k].g_shunt, g.buses[k].b_shunt);
    for (const Branch &br : g.branches) {
        const int l = br.from - 1, m = br.to - 1;
        const cplx y = 1.0 / cplx(br.r, br.x);
        const cplx ysh(0.0, br.b / 2);
        Y(l, l) += y + ysh;
        Y(m, m) += y + ysh;
        Y(l, m) -= y;
        Y(m, l) -= y;
    }
    return Y;
}

} // namespace

TEST(MatrixBuilder, TwoBusAdmittance) {
    Grid g = line_grid(cplx(1, -10), 0.0);
    Eigen::MatrixXcd Y = build_bus_admittance(g);
    EXPECT_NEAR(std::abs(Y(0, 0) - cplx(1, -10)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(Y(0, 1) - cplx(-1, 10)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(Y(1, 0) - cplx(-1, 10)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(Y(1, 1) - cplx(1, -10)), 0.0, 1e-12);
}

TEST(MatrixBuilder, LineChargingAddsToDiagonal) {
    Eigen::MatrixXcd Y0 = build_bus_admittance(line_grid(cplx(1, -10), 0.0));
    Eigen::MatrixXcd Y1 = build_bus_admittance(line_grid(cplx(1, -10), 0.1));
    EXPECT_NEAR(std::abs(Y1(0, 0) - Y0(0, 0) - cplx(0, 0.05)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(Y1(1, 1) - Y0(1, 1) - cplx(0, 0.05)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(Y1(0, 1) - Y0(0, 1)), 0.0, 1e-12);
}

TEST(MatrixBuilder, AdmittanceMatchesElementwiseOracle) {
    for (const char *f : {"/case5ac_3dc.json", "/acdc18.json"}) {
        NetworkCase c = load_case(kData + f);
        for (const Grid &g : c.grids) {
            Eigen::MatrixXcd Y = build_bus_admittance(g);
            EXPECT_LE((Y - admittance_oracle(g)).cwiseAbs().maxCoeff(), 1e-12) << f << " grid " << g.id;
        }
    }
}

TEST(MatrixBuilder, UnitVoltageGivesUnitMagnitude) {
    NetworkCase c = load_case(kData + "/case5ac_3dc.json");
    AuxiliaryMatrices aux = build_aux_matrices(c.grids[0]);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(2 * aux.n);
    x(0) = 1.0;
    Eigen::MatrixXd W = x * x.transpose();
    EXPECT_DOUBLE_EQ(aux.Mk[0].trace_with(W), 1.0);
    EXPECT_DOUBLE_EQ(aux.Mk[1].trace_with(W), 0.0);
}

TEST(MatrixBuilder, TraceIdentitiesOnRandomVoltages) {
    std::mt19937_64 rng(7);
    for (const char *f : {"/case5ac_3dc.json", "/acdc18.json"}) {
        NetworkCase c = load_case(kData + f);
        for (const Grid &g : c.grids) {
            const bool dc = g.kind == GridKind::DC;
            AuxiliaryMatrices aux = build_aux_matrices(g);
            Eigen::MatrixXcd Y = admittance_oracle(g);
            double worst = 0.0;
            for (int trial = 0; trial < 1000; ++trial) {
                Eigen::VectorXcd V = random_voltage(g.n(), rng, dc);
                Eigen::VectorXd x = lift_voltage(V);
                Eigen::VectorXcd S = V.cwiseProduct((Y * V).conjugate());
                for (int k = 0; k < g.n(); ++k) {
                    worst = std::max(worst, std::abs(aux.Yk[k].quad(x) - S(k).real()));
                    worst = std::max(worst, std::abs(aux.Ybark[k].quad(x) - S(k).imag()));
                    worst = std::max(worst, std::abs(aux.Mk[k].quad(x) - std::norm(V(k))));
                }
                for (size_t l = 0; l < g.branches.size(); ++l) {
                    const Branch &br = g.branches[l];
                    const cplx vl = V(br.from - 1), vm = V(br.to - 1);
                    const cplx y = 1.0 / cplx(br.r, br.x), ysh(0.0, br.b / 2);
                    const cplx slm = vl * std::conj(y * (vl - vm) + ysh * vl);
                    const cplx sml = vm * std::conj(y * (vm - vl) + ysh * vm);
                    worst = std::max(worst, std::abs(aux.Ylm[l].quad(x) - slm.real()));
                    worst = std::max(worst, std::abs(aux.Ybarlm[l].quad(x) - slm.imag()));
                    worst = std::max(worst, std::abs(aux.Yml[l].quad(x) - sml.real()));
                    worst = std::max(worst, std::abs(aux.Ybarml[l].quad(x) - sml.imag()));
                    worst = std::max(worst, std::abs(aux.Mlm[l].quad(x) - std::norm(vl - vm)));
                }
            }
            EXPECT_LE(worst, 1e-9) << f << " grid " << g.id;
        }
    }
}

TEST(MatrixBuilder, QuadAgreesWithTraceOfOuterProduct) {
    NetworkCase c = load_case(kData + "/acdc18.json");
    AuxiliaryMatrices aux = build_aux_matrices(c.grids[0]);
    std::mt19937_64 rng(3);
    Eigen::VectorXd x = lift_voltage(random_voltage(aux.n, rng, false));
    Eigen::MatrixXd W = x * x.transpose();
    for (int k = 0; k < aux.n; ++k) EXPECT_NEAR(aux.Yk[k].trace_with(W), aux.Yk[k].quad(x), 1e-12);
}

TEST(MatrixBuilder, BranchLossEqualsCurrentSquaredTimesR) {
    NetworkCase c = load_case(kData + "/acdc18.json");
    std::mt19937_64 rng(11);
    for (const Grid &g : c.grids) {
        AuxiliaryMatrices aux = build_aux_matrices(g);
        Eigen::VectorXcd V = random_voltage(g.n(), rng, g.kind == GridKind::DC);
        Eigen::VectorXd x = lift_voltage(V);
        for (size_t l = 0; l < g.branches.size(); ++l) {
            const Branch &br = g.branches[l];
            const cplx I = (V(br.from - 1) - V(br.to - 1)) / cplx(br.r, br.x);
            EXPECT_NEAR(aux.Ylm[l].quad(x) + aux.Yml[l].quad(x), std::norm(I) * br.r, 1e-10);
        }
    }
}

TEST(MatrixBuilder, SymmetricAndRotationInvariant) {
    NetworkCase c = load_case(kData + "/acdc18.json");
    AuxiliaryMatrices aux = build_aux_matrices(c.grids[0]);
    const int n = aux.n;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    J.topRightCorner(n, n) = -Eigen::MatrixXd::Identity(n, n);
    J.bottomLeftCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
    auto check = [&](const SparseSym &S) {
        Eigen::MatrixXd D = S.dense();
        EXPECT_LE((D - D.transpose()).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LE((J.transpose() * D * J - D).cwiseAbs().maxCoeff(), 1e-12);
    };
    for (int k = 0; k < n; ++k) {
        check(aux.Yk[k]);
        check(aux.Ybark[k]);
        check(aux.Mk[k]);
    }
    for (size_t l = 0; l < aux.Ylm.size(); ++l) {
        check(aux.Ylm[l]);
        check(aux.Ybarlm[l]);
        check(aux.Mlm[l]);
    }
}

TEST(MatrixBuilder, SparsityRestrictedToIncidentBuses) {
    NetworkCase c = load_case(kData + "/acdc18.json");
    const Grid &g = c.grids[0];
    AuxiliaryMatrices aux = build_aux_matrices(g);
    for (int k = 0; k < g.n(); ++k) {
        std::vector<bool> near(g.n(), false);
        near[k] = true;
        for (const Branch &br : g.branches) {
            if (br.from - 1 == k) near[br.to - 1] = true;
            if (br.to - 1 == k) near[br.from - 1] = true;
        }
        for (const auto &e : aux.Yk[k].entries()) {
            EXPECT_TRUE(near[e.row % g.n()]);
            EXPECT_TRUE(near[e.col % g.n()]);
        }
    }
}

TEST(MatrixBuilder, ConverterMkfIsReactorVoltageDrop) {
    NetworkCase c = load_case(kData + "/acdc18.json");
    std::mt19937_64 rng(5);
    for (size_t k = 0; k < c.converters.size(); ++k) {
        const Converter &cv = c.converters[k];
        const Grid &g = c.grid(cv.ac_grid);
        Eigen::VectorXcd V = random_voltage(g.n(), rng, false);
        SparseSym M = converter_mkf(c, static_cast<int>(k));
        EXPECT_NEAR(M.quad(lift_voltage(V)), std::norm(V(cv.ac_bus - 1) - V(cv.filter_bus - 1)), 1e-12);
    }
}

// Homogeneous self-dual primal-dual interior point method with
// Nesterov-Todd scaling and Mehrotra predictor-corrector.
#include "ccopf/conic.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace ccopf {

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Col = std::vector<std::pair<int, double>>;

double sym_dot(const std::vector<SymEntry> &a, const Mat &X) {
    double s = 0.0;
    for (const SymEntry &e : a) s += (e.i == e.j ? 1.0 : 2.0) * e.v * X(e.i, e.j);
    return s;
}

void sym_axpy(Mat &X, double alpha, const std::vector<SymEntry> &a) {
    for (const SymEntry &e : a) {
        X(e.i, e.j) += alpha * e.v;
        if (e.i != e.j) X(e.j, e.i) += alpha * e.v;
    }
}

struct Block {
    int d = 0;
    Mat C;
    std::vector<int> rows;                  // global row ids touching this block
    std::vector<std::vector<SymEntry>> A;  // per entry of rows
};

struct Data {
    int m = 0;
    Vec b;
    std::vector<Block> blocks;
    Vec cl, cu;
    std::vector<Col> Al, Au;
    int nl = 0, nu = 0;
    double norm_b = 0.0, norm_c = 0.0;

    // A(X) + A_l x + A_u u
    Vec apply(const std::vector<Mat> &X, const Vec &x, const Vec &u) const {
        Vec r = Vec::Zero(m);
        for (size_t j = 0; j < blocks.size(); ++j) {
            const Block &bk = blocks[j];
            for (size_t k = 0; k < bk.rows.size(); ++k) r(bk.rows[k]) += sym_dot(bk.A[k], X[j]);
        }
        for (int l = 0; l < nl; ++l)
            for (auto [row, v] : Al[l]) r(row) += v * x(l);
        for (int l = 0; l < nu; ++l)
            for (auto [row, v] : Au[l]) r(row) += v * u(l);
        return r;
    }
    Mat adjoint_block(size_t j, const Vec &y) const {
        const Block &bk = blocks[j];
        Mat S = Mat::Zero(bk.d, bk.d);
        for (size_t k = 0; k < bk.rows.size(); ++k) {
            const double yk = y(bk.rows[k]);
            if (yk != 0.0) sym_axpy(S, yk, bk.A[k]);
        }
        return S;
    }
    Vec adjoint_lp(const Vec &y) const {
        Vec s(nl);
        for (int l = 0; l < nl; ++l) {
            double t = 0.0;
            for (auto [row, v] : Al[l]) t += v * y(row);
            s(l) = t;
        }
        return s;
    }
    Vec adjoint_free(const Vec &y) const {
        Vec s(nu);
        for (int l = 0; l < nu; ++l) {
            double t = 0.0;
            for (auto [row, v] : Au[l]) t += v * y(row);
            s(l) = t;
        }
        return s;
    }
    double cdot(const std::vector<Mat> &X, const Vec &x, const Vec &u) const {
        double s = cl.dot(x) + cu.dot(u);
        for (size_t j = 0; j < blocks.size(); ++j) s += (blocks[j].C.array() * X[j].array()).sum();
        return s;
    }
};

struct Scaling {
    std::vector<double> s_blk, s_l, s_u; // column (block) scaling
    Vec r;                               // row scaling
    double theta_b = 1.0, theta_c = 1.0;
};

Data build(const ConicProblem &p, const Scaling *sc) {
    Data D;
    D.m = p.m;
    D.b = p.b;
    D.nl = p.nonneg.dim;
    D.nu = p.free.dim;
    const double tb = sc ? sc->theta_b : 1.0, tc = sc ? sc->theta_c : 1.0;
    auto rs = [&](int row) { return sc ? sc->r(row) : 1.0; };
    for (int i = 0; i < D.m; ++i) D.b(i) = p.b(i) * rs(i) / tb;
    for (size_t j = 0; j < p.psd.size(); ++j) {
        const auto &pb = p.psd[j];
        const double s = sc ? sc->s_blk[j] : 1.0;
        Block bk;
        bk.d = pb.dim;
        bk.C = Mat::Zero(pb.dim, pb.dim);
        for (const SymEntry &e : pb.C) {
            bk.C(e.i, e.j) += e.v * s / tc;
            if (e.i != e.j) bk.C(e.j, e.i) += e.v * s / tc;
        }
        for (const auto &[row, e] : pb.A) {
            if (bk.rows.empty() || bk.rows.back() != row) {
                bk.rows.push_back(row);
                bk.A.emplace_back();
            }
            bk.A.back().push_back({e.i, e.j, e.v * s * rs(row)});
        }
        D.blocks.push_back(std::move(bk));
    }
    D.cl = Vec(D.nl);
    for (int l = 0; l < D.nl; ++l) {
        const double s = sc ? sc->s_l[l] : 1.0;
        D.cl(l) = p.nonneg.c[l] * s / tc;
        Col c;
        for (auto [row, v] : p.nonneg.cols[l]) c.push_back({row, v * s * rs(row)});
        D.Al.push_back(std::move(c));
    }
    D.cu = Vec(D.nu);
    for (int l = 0; l < D.nu; ++l) {
        const double s = sc ? sc->s_u[l] : 1.0;
        D.cu(l) = p.free.c[l] * s / tc;
        Col c;
        for (auto [row, v] : p.free.cols[l]) c.push_back({row, v * s * rs(row)});
        D.Au.push_back(std::move(c));
    }
    D.norm_b = D.b.norm();
    double c2 = D.cl.squaredNorm() + D.cu.squaredNorm();
    for (const Block &bk : D.blocks) c2 += bk.C.squaredNorm();
    D.norm_c = std::sqrt(c2);
    return D;
}

Scaling make_scaling(const ConicProblem &p) {
    Scaling sc;
    for (const auto &pb : p.psd) {
        double mx = 0.0;
        for (const auto &[row, e] : pb.A) mx = std::max(mx, std::abs(e.v));
        sc.s_blk.push_back(mx > 0.0 ? 1.0 / mx : 1.0);
    }
    for (const auto &c : p.nonneg.cols) {
        double mx = 0.0;
        for (auto [row, v] : c) mx = std::max(mx, std::abs(v));
        sc.s_l.push_back(mx > 0.0 ? 1.0 / mx : 1.0);
    }
    for (const auto &c : p.free.cols) {
        double mx = 0.0;
        for (auto [row, v] : c) mx = std::max(mx, std::abs(v));
        sc.s_u.push_back(mx > 0.0 ? 1.0 / mx : 1.0);
    }
    Vec rmax = Vec::Zero(p.m);
    for (size_t j = 0; j < p.psd.size(); ++j)
        for (const auto &[row, e] : p.psd[j].A) rmax(row) = std::max(rmax(row), std::abs(e.v) * sc.s_blk[j]);
    for (int l = 0; l < p.nonneg.dim; ++l)
        for (auto [row, v] : p.nonneg.cols[l]) rmax(row) = std::max(rmax(row), std::abs(v) * sc.s_l[l]);
    for (int l = 0; l < p.free.dim; ++l)
        for (auto [row, v] : p.free.cols[l]) rmax(row) = std::max(rmax(row), std::abs(v) * sc.s_u[l]);
    sc.r = Vec(p.m);
    for (int i = 0; i < p.m; ++i) sc.r(i) = rmax(i) > 0.0 ? 1.0 / rmax(i) : 1.0;

    double bmax = 0.0, cmax = 0.0;
    for (int i = 0; i < p.m; ++i) bmax = std::max(bmax, std::abs(p.b(i) * sc.r(i)));
    for (size_t j = 0; j < p.psd.size(); ++j)
        for (const SymEntry &e : p.psd[j].C) cmax = std::max(cmax, std::abs(e.v * sc.s_blk[j]));
    for (int l = 0; l < p.nonneg.dim; ++l) cmax = std::max(cmax, std::abs(p.nonneg.c[l] * sc.s_l[l]));
    for (int l = 0; l < p.free.dim; ++l) cmax = std::max(cmax, std::abs(p.free.c[l] * sc.s_u[l]));
    sc.theta_b = std::max(1.0, bmax);
    sc.theta_c = std::max(1.0, cmax);
    return sc;
}

struct NtBlock {
    Mat G, Ginv, W;
    Vec lam;
};

bool nt_scaling(const Mat &X, const Mat &Z, NtBlock &nt) {
    Eigen::LLT<Mat> llt(X);
    if (llt.info() != Eigen::Success) return false;
    Mat L = llt.matrixL();
    Mat LZL = L.transpose() * Z * L;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (LZL + LZL.transpose()));
    if (es.info() != Eigen::Success) return false;
    Vec D = es.eigenvalues();
    if (D.minCoeff() <= 0.0) return false;
    Vec q = D.array().pow(-0.25);
    nt.G = L * es.eigenvectors() * q.asDiagonal();
    Mat Linv = L.triangularView<Eigen::Lower>().solve(Mat::Identity(X.rows(), X.cols()));
    nt.Ginv = D.array().pow(0.25).matrix().asDiagonal() * es.eigenvectors().transpose() * Linv;
    nt.W = nt.G * nt.G.transpose();
    nt.lam = D.array().sqrt();
    return true;
}

// largest alpha with lam + alpha * dS psd, in the scaled frame
double max_step_scaled(const Vec &lam, const Mat &dS) {
    Vec is = lam.array().rsqrt();
    Mat Mx = is.asDiagonal() * dS * is.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (Mx + Mx.transpose()), Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    return lmin < 0.0 ? -1.0 / lmin : std::numeric_limits<double>::infinity();
}

Mat sym_product(const Mat &A, const Mat &B) { return 0.5 * (A * B + B * A); }

struct State {
    std::vector<Mat> X, Z;
    Vec x, z, u, y;
    double tau = 1.0, kappa = 1.0;
};

struct Direction {
    std::vector<Mat> dX, dZ;
    Vec dx, dz, du, dy;
    double dtau = 0.0, dkappa = 0.0;
};

class Ipm {
public:
    Ipm(const Data &d, const SolverOptions &o) : D(d), opt(o) {}

    const Data &D;
    const SolverOptions &opt;
    State s;
    std::vector<NtBlock> nt;
    Vec dl, laml; // LP scaling sqrt(x/z), sqrt(xz)
    Eigen::PartialPivLU<Mat> lu;
    Mat K;
    Vec dyq, duq, q0;
    double g = 0.0;
    int nu_cone = 0;

    // residuals
    Vec r1, r2l, r3;
    std::vector<Mat> R2;
    double r4 = 0.0;

    void init() {
        for (const Block &bk : D.blocks) {
            s.X.push_back(Mat::Identity(bk.d, bk.d));
            s.Z.push_back(Mat::Identity(bk.d, bk.d));
            nu_cone += bk.d;
        }
        nu_cone += D.nl;
        s.x = Vec::Ones(D.nl);
        s.z = Vec::Ones(D.nl);
        s.u = Vec::Zero(D.nu);
        s.y = Vec::Zero(D.m);
        s.tau = s.kappa = 1.0;
        nt.resize(D.blocks.size());
    }

    double mu() const {
        double t = s.x.dot(s.z) + s.tau * s.kappa;
        for (size_t j = 0; j < s.X.size(); ++j) t += (s.X[j].array() * s.Z[j].array()).sum();
        return t / (nu_cone + 1);
    }

    void residuals() {
        r1 = D.apply(s.X, s.x, s.u) - D.b * s.tau;
        R2.resize(D.blocks.size());
        for (size_t j = 0; j < D.blocks.size(); ++j) R2[j] = D.adjoint_block(j, s.y) + s.Z[j] - D.blocks[j].C * s.tau;
        r2l = D.adjoint_lp(s.y) + s.z - D.cl * s.tau;
        r3 = D.adjoint_free(s.y) - D.cu * s.tau;
        r4 = D.cdot(s.X, s.x, s.u) - D.b.dot(s.y) + s.kappa;
    }

    double residual_norm() const {
        double t = r1.squaredNorm() + r2l.squaredNorm() + r3.squaredNorm() + r4 * r4;
        for (const Mat &R : R2) t += R.squaredNorm();
        return std::sqrt(t);
    }

    bool scale_and_factor() {
        for (size_t j = 0; j < D.blocks.size(); ++j)
            if (!nt_scaling(s.X[j], s.Z[j], nt[j])) return false;
        dl = (s.x.array() / s.z.array()).sqrt();
        laml = (s.x.array() * s.z.array()).sqrt();

        const int N = D.m + D.nu;
        K = Mat::Zero(N, N);
        for (size_t j = 0; j < D.blocks.size(); ++j) {
            const Block &bk = D.blocks[j];
            const Mat &W = nt[j].W;
            const size_t nr = bk.rows.size();
            for (size_t a = 0; a < nr; ++a) {
                // T = W A_a W
                Mat T = Mat::Zero(bk.d, bk.d);
                for (const SymEntry &e : bk.A[a]) {
                    if (e.i == e.j)
                        T.noalias() += e.v * W.col(e.i) * W.row(e.i);
                    else
                        T.noalias() += e.v * (W.col(e.i) * W.row(e.j) + W.col(e.j) * W.row(e.i));
                }
                for (size_t c = a; c < nr; ++c) {
                    const double v = sym_dot(bk.A[c], T);
                    K(bk.rows[a], bk.rows[c]) += v;
                    if (c != a) K(bk.rows[c], bk.rows[a]) += v;
                }
            }
        }
        for (int l = 0; l < D.nl; ++l) {
            const double w = dl(l) * dl(l);
            for (auto [ra, va] : D.Al[l])
                for (auto [rc, vc] : D.Al[l]) K(ra, rc) += w * va * vc;
        }
        for (int l = 0; l < D.nu; ++l)
            for (auto [row, v] : D.Au[l]) {
                K(row, D.m + l) += v;
                K(D.m + l, row) += v;
            }
        double dmax = 1.0;
        for (int i = 0; i < D.m; ++i) dmax = std::max(dmax, K(i, i));
        Mat Kreg = K;
        const double delta = opt.regularization * dmax;
        for (int i = 0; i < D.m; ++i) Kreg(i, i) += delta;
        for (int i = D.m; i < N; ++i) Kreg(i, i) -= delta;
        lu.compute(Kreg);

        // q-system: right-hand side b + A(W C W)
        std::vector<Mat> WCW(D.blocks.size());
        g = 0.0;
        for (size_t j = 0; j < D.blocks.size(); ++j) {
            WCW[j] = nt[j].W * D.blocks[j].C * nt[j].W;
            g += (D.blocks[j].C.array() * WCW[j].array()).sum();
        }
        Vec lpc = dl.array().square() * D.cl.array();
        g += D.cl.dot(lpc);
        q0 = D.apply(WCW, lpc, Vec::Zero(D.nu));
        Vec rhs(N);
        rhs.head(D.m) = D.b + q0;
        rhs.tail(D.nu) = D.cu;
        Vec sol;
        if (!solve(rhs, sol)) return false;
        dyq = sol.head(D.m);
        duq = sol.tail(D.nu);
        return true;
    }

    bool solve(const Vec &rhs, Vec &sol) const {
        sol = lu.solve(rhs);
        for (int it = 0; it < 3; ++it) {
            Vec res = rhs - K * sol;
            sol += lu.solve(res);
        }
        return sol.allFinite();
    }

    // Newton direction. eta scales the linear residuals, target is sigma*mu,
    // corr carries the Mehrotra second-order terms (nullptr for the predictor).
    bool direction(double eta, double target, const Direction *corr, Direction &dir) {
        const size_t nb = D.blocks.size();
        std::vector<Mat> Rc(nb), U(nb);
        for (size_t j = 0; j < nb; ++j) {
            const NtBlock &t = nt[j];
            const int d = D.blocks[j].d;
            Mat R = Mat::Zero(d, d);
            R.diagonal() = -t.lam.array().square().matrix();
            R.diagonal().array() += target;
            if (corr) {
                Mat a = t.Ginv * corr->dX[j] * t.Ginv.transpose();
                Mat b = t.G.transpose() * corr->dZ[j] * t.G;
                R -= sym_product(a, b);
            }
            Mat T(d, d);
            for (int p = 0; p < d; ++p)
                for (int q = 0; q < d; ++q) T(p, q) = 2.0 * R(p, q) / (t.lam(p) + t.lam(q));
            Rc[j] = t.G * T * t.G.transpose();
            U[j] = Rc[j] + eta * t.W * R2[j] * t.W;
        }
        Vec rcl(D.nl), ul(D.nl);
        for (int l = 0; l < D.nl; ++l) {
            double r = target - s.x(l) * s.z(l);
            if (corr) r -= corr->dx(l) * corr->dz(l);
            rcl(l) = dl(l) * r / laml(l);
            ul(l) = rcl(l) + eta * dl(l) * dl(l) * r2l(l);
        }
        double rtau = target - s.tau * s.kappa;
        if (corr) rtau -= corr->dtau * corr->dkappa;

        const int N = D.m + D.nu;
        Vec rhs(N);
        rhs.head(D.m) = -eta * r1 - D.apply(U, ul, Vec::Zero(D.nu));
        rhs.tail(D.nu) = -eta * r3;
        Vec sol;
        if (!solve(rhs, sol)) return false;
        Vec dyp = sol.head(D.m), dup = sol.tail(D.nu);

        double k0 = D.cl.dot(ul);
        for (size_t j = 0; j < nb; ++j) k0 += (D.blocks[j].C.array() * U[j].array()).sum();
        const Vec qb = q0 - D.b;
        const double num = -eta * r4 - k0 - qb.dot(dyp) - D.cu.dot(dup) - rtau / s.tau;
        const double den = qb.dot(dyq) + D.cu.dot(duq) - g - s.kappa / s.tau;
        if (den == 0.0 || !std::isfinite(den)) return false;
        dir.dtau = num / den;
        dir.dy = dyp + dir.dtau * dyq;
        dir.du = dup + dir.dtau * duq;
        dir.dX.resize(nb);
        dir.dZ.resize(nb);
        for (size_t j = 0; j < nb; ++j) {
            dir.dZ[j] = -eta * R2[j] - D.adjoint_block(j, dir.dy) + D.blocks[j].C * dir.dtau;
            dir.dX[j] = Rc[j] - nt[j].W * dir.dZ[j] * nt[j].W;
            dir.dX[j] = 0.5 * (dir.dX[j] + dir.dX[j].transpose());
        }
        dir.dz = -eta * r2l - D.adjoint_lp(dir.dy) + D.cl * dir.dtau;
        dir.dx = rcl - dl.array().square().matrix().cwiseProduct(dir.dz);
        dir.dkappa = (rtau - s.kappa * dir.dtau) / s.tau;
        return dir.dy.allFinite() && std::isfinite(dir.dtau);
    }

    double max_step(const Direction &dir) const {
        double a = std::numeric_limits<double>::infinity();
        for (size_t j = 0; j < D.blocks.size(); ++j) {
            const NtBlock &t = nt[j];
            a = std::min(a, max_step_scaled(t.lam, t.Ginv * dir.dX[j] * t.Ginv.transpose()));
            a = std::min(a, max_step_scaled(t.lam, t.G.transpose() * dir.dZ[j] * t.G));
        }
        for (int l = 0; l < D.nl; ++l) {
            if (dir.dx(l) < 0.0) a = std::min(a, -s.x(l) / dir.dx(l));
            if (dir.dz(l) < 0.0) a = std::min(a, -s.z(l) / dir.dz(l));
        }
        if (dir.dtau < 0.0) a = std::min(a, -s.tau / dir.dtau);
        if (dir.dkappa < 0.0) a = std::min(a, -s.kappa / dir.dkappa);
        return a;
    }

    double mu_after(const Direction &dir, double a) const {
        double t = (s.x + a * dir.dx).dot(s.z + a * dir.dz) + (s.tau + a * dir.dtau) * (s.kappa + a * dir.dkappa);
        for (size_t j = 0; j < s.X.size(); ++j)
            t += ((s.X[j] + a * dir.dX[j]).array() * (s.Z[j] + a * dir.dZ[j]).array()).sum();
        return t / (nu_cone + 1);
    }

    void take(const Direction &dir, double a) {
        for (size_t j = 0; j < s.X.size(); ++j) {
            s.X[j] += a * dir.dX[j];
            s.Z[j] += a * dir.dZ[j];
            s.X[j] = 0.5 * (s.X[j] + s.X[j].transpose());
            s.Z[j] = 0.5 * (s.Z[j] + s.Z[j].transpose());
        }
        s.x += a * dir.dx;
        s.z += a * dir.dz;
        s.u += a * dir.du;
        s.y += a * dir.dy;
        s.tau += a * dir.dtau;
        s.kappa += a * dir.dkappa;
    }
};

struct Measures {
    double pobj, dobj, pres, dres, gap;
};

Measures measure(const Data &D, const std::vector<Mat> &X, const Vec &x, const Vec &u, const Vec &y,
                 const std::vector<Mat> &Z, const Vec &z) {
    Measures m;
    m.pobj = D.cdot(X, x, u);
    m.dobj = D.b.dot(y);
    m.pres = (D.apply(X, x, u) - D.b).norm() / (1.0 + D.norm_b);
    double d2 = (D.adjoint_lp(y) + z - D.cl).squaredNorm() + (D.adjoint_free(y) - D.cu).squaredNorm();
    for (size_t j = 0; j < D.blocks.size(); ++j) d2 += (D.adjoint_block(j, y) + Z[j] - D.blocks[j].C).squaredNorm();
    m.dres = std::sqrt(d2) / (1.0 + D.norm_c);
    m.gap = std::abs(m.pobj - m.dobj) / (1.0 + std::abs(m.pobj) + std::abs(m.dobj));
    return m;
}

} // namespace

ConicSolution solve_sdp(const ConicProblem &input, const SolverOptions &opt) {
    ConicProblem p = input;
    p.canonicalize();
    const Scaling sc = make_scaling(p);
    const Data D = build(p, &sc);
    const Data raw = build(p, nullptr);

    ConicSolution sol;
    Ipm ipm(D, opt);
    ipm.init();

    enum class Raw { Running, Optimal, PrimalInf, DualInf, IterLimit, NumErr } verdict = Raw::Running;
    int stall = 0;
    double best_score = std::numeric_limits<double>::infinity();
    double best_reduced = std::numeric_limits<double>::infinity();
    State best = ipm.s, best_r = ipm.s;
    int it = 0;
    auto unscaled = [&](const State &st, double div, std::vector<Mat> &X, std::vector<Mat> &S, Vec &x, Vec &z, Vec &u,
                        Vec &y) {
        X.resize(p.psd.size());
        S.resize(p.psd.size());
        for (size_t j = 0; j < p.psd.size(); ++j) {
            X[j] = st.X[j] * (sc.s_blk[j] * sc.theta_b / div);
            S[j] = st.Z[j] * (sc.theta_c / sc.s_blk[j] / div);
        }
        x = Vec(p.nonneg.dim);
        z = Vec(p.nonneg.dim);
        for (int l = 0; l < p.nonneg.dim; ++l) {
            x(l) = st.x(l) * sc.s_l[l] * sc.theta_b / div;
            z(l) = st.z(l) * sc.theta_c / sc.s_l[l] / div;
        }
        u = Vec(p.free.dim);
        for (int l = 0; l < p.free.dim; ++l) u(l) = st.u(l) * sc.s_u[l] * sc.theta_b / div;
        y = Vec(p.m);
        for (int i = 0; i < p.m; ++i) y(i) = st.y(i) * sc.r(i) * sc.theta_c / div;
    };
    for (; it <= opt.max_iter; ++it) {
        ipm.residuals();
        const State &s = ipm.s;
        std::vector<Mat> Xn(s.X.size()), Zn(s.Z.size());
        for (size_t j = 0; j < s.X.size(); ++j) {
            Xn[j] = s.X[j] / s.tau;
            Zn[j] = s.Z[j] / s.tau;
        }
        Measures ms = measure(D, Xn, s.x / s.tau, s.u / s.tau, s.y / s.tau, Zn, s.z / s.tau);
        const double mu = ipm.mu();
        if (opt.keep_trace)
            sol.trace.push_back({ms.pobj, ms.dobj, ms.pres, ms.dres, ms.gap, mu, s.tau, s.kappa, ipm.residual_norm(), 0.0});
        const double score = std::max({ms.pres / opt.accept_feas, ms.dres / opt.accept_feas, ms.gap / opt.accept_gap});
        if (score < best_score) {
            best_score = score;
            best = s;
        }
        const double reduced = std::max({ms.pres / opt.reduced_feas, ms.dres / opt.reduced_feas, ms.gap / opt.reduced_gap});
        if (reduced < best_reduced) {
            best_reduced = reduced;
            best_r = s;
        }
        if (ms.pres <= opt.tol_feas && ms.dres <= opt.tol_feas && ms.gap <= opt.tol_gap) {
            verdict = Raw::Optimal;
            break;
        }
        if (s.tau <= opt.infeas_ratio * s.kappa) {
            const double by = D.b.dot(s.y), cx = D.cdot(s.X, s.x, s.u);
            if (by > 0.0 && by >= -cx) {
                verdict = Raw::PrimalInf;
                break;
            }
            if (cx < 0.0) {
                verdict = Raw::DualInf;
                break;
            }
        }
        if (it == opt.max_iter) {
            verdict = Raw::IterLimit;
            break;
        }
        if (!ipm.scale_and_factor()) {
            verdict = Raw::NumErr;
            sol.message = "scaling or factorisation failed";
            break;
        }
        Direction aff;
        if (!ipm.direction(1.0, 0.0, nullptr, aff)) {
            verdict = Raw::NumErr;
            sol.message = "predictor solve failed";
            break;
        }
        const double a_aff = std::min(1.0, ipm.max_step(aff));
        const double mu_aff = ipm.mu_after(aff, a_aff);
        const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);
        Direction dir;
        if (!ipm.direction(1.0 - sigma, sigma * mu, &aff, dir)) {
            verdict = Raw::NumErr;
            sol.message = "corrector solve failed";
            break;
        }
        const double amax = ipm.max_step(dir);
        const double a = std::min(1.0, 0.98 * amax);
        if (opt.keep_trace) sol.trace.back().step = a;
        if (!(a > 1e-12)) {
            if (++stall >= 3) {
                verdict = Raw::NumErr;
                sol.message = "step length collapsed";
                break;
            }
            continue;
        }
        stall = 0;
        ipm.take(dir, a);
    }
    sol.iterations = it;

    // fall back to the best iterate when the strict targets were not reached
    State fin = ipm.s;
    if ((verdict == Raw::NumErr || verdict == Raw::IterLimit) && best_score <= 1.0) {
        fin = best;
        verdict = Raw::Optimal;
        sol.message += sol.message.empty() ? "accepted at relaxed tolerance" : "; accepted at relaxed tolerance";
    } else if ((verdict == Raw::NumErr || verdict == Raw::IterLimit) && best_reduced <= 1.0) {
        fin = best_r;
        verdict = Raw::Optimal;
        sol.message += sol.message.empty() ? "accepted at reduced accuracy" : "; accepted at reduced accuracy";
    }

    const bool certificate = verdict == Raw::PrimalInf || verdict == Raw::DualInf;
    unscaled(fin, certificate ? 1.0 : fin.tau, sol.X, sol.S, sol.x_nonneg, sol.s_nonneg, sol.u_free, sol.y);

    Measures mr = measure(raw, sol.X, sol.x_nonneg, sol.u_free, sol.y, sol.S, sol.s_nonneg);
    sol.pobj = mr.pobj;
    sol.dobj = mr.dobj;
    sol.pres = mr.pres;
    sol.dres = mr.dres;
    sol.gap = mr.gap;

    const bool model_is_dual = p.dual_is_model;
    switch (verdict) {
    case Raw::Optimal: sol.status = SolveStatus::Optimal; break;
    case Raw::PrimalInf: sol.status = model_is_dual ? SolveStatus::Unbounded : SolveStatus::Infeasible; break;
    case Raw::DualInf: sol.status = model_is_dual ? SolveStatus::Infeasible : SolveStatus::Unbounded; break;
    case Raw::IterLimit: sol.status = SolveStatus::IterLimit; break;
    default: sol.status = SolveStatus::NumErr; break;
    }
    return sol;
}

} // namespace ccopf

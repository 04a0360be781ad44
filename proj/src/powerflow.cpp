#include "ccopf/powerflow.hpp"
#include "ccopf/errors.hpp"
#include "ccopf/matrix_builder.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace ccopf {

namespace {

const cplx kJ(0.0, 1.0);

double max_abs(const Eigen::VectorXd &v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

} // namespace

AcPfResult solve_ac_pf(const Eigen::MatrixXcd &Y, std::vector<AcPfBus> buses, double tol, int max_iter,
                       bool enforce_q_limits, const Eigen::VectorXcd *warm) {
    const int n = static_cast<int>(buses.size());
    AcPfResult out;
    Eigen::VectorXcd V(n);
    for (int i = 0; i < n; ++i) {
        if (warm && warm->size() == n)
            V(i) = (*warm)(i);
        else
            V(i) = buses[i].type == AcPfBus::PQ ? 1.0 : buses[i].v;
        if (buses[i].type != AcPfBus::PQ) V(i) *= buses[i].v / std::abs(V(i));
    }
    for (int round = 0; round < 2 * n + 2; ++round) {
        std::vector<int> pvpq, pq;
        for (int i = 0; i < n; ++i) {
            if (buses[i].type != AcPfBus::Slack) pvpq.push_back(i);
            if (buses[i].type == AcPfBus::PQ) pq.push_back(i);
        }
        const int a = static_cast<int>(pvpq.size()), b = static_cast<int>(pq.size());
        Eigen::VectorXd spec_p(n), spec_q(n);
        for (int i = 0; i < n; ++i) {
            spec_p(i) = buses[i].p;
            spec_q(i) = buses[i].q;
        }
        auto mismatch = [&](const Eigen::VectorXcd &v, Eigen::VectorXd &F) {
            Eigen::VectorXcd S = v.cwiseProduct((Y * v).conjugate());
            F.resize(a + b);
            for (int r = 0; r < a; ++r) F(r) = S(pvpq[r]).real() - spec_p(pvpq[r]);
            for (int r = 0; r < b; ++r) F(a + r) = S(pq[r]).imag() - spec_q(pq[r]);
        };
        Eigen::VectorXd F;
        mismatch(V, F);
        bool ok = max_abs(F) <= tol;
        int it = 0;
        while (!ok && it < max_iter) {
            ++it;
            Eigen::VectorXcd I = Y * V;
            Eigen::VectorXcd Vn = V.cwiseQuotient(V.cwiseAbs().cast<cplx>());
            Eigen::MatrixXcd dVa = kJ * V.asDiagonal() * (Eigen::MatrixXcd(I.asDiagonal()) - Y * V.asDiagonal()).conjugate();
            Eigen::MatrixXcd dVm = V.asDiagonal() * (Y * Vn.asDiagonal()).conjugate();
            dVm += Eigen::MatrixXcd(I.conjugate().asDiagonal()) * Vn.asDiagonal();
            Eigen::MatrixXd J(a + b, a + b);
            for (int r = 0; r < a; ++r) {
                for (int c = 0; c < a; ++c) J(r, c) = dVa(pvpq[r], pvpq[c]).real();
                for (int c = 0; c < b; ++c) J(r, a + c) = dVm(pvpq[r], pq[c]).real();
            }
            for (int r = 0; r < b; ++r) {
                for (int c = 0; c < a; ++c) J(a + r, c) = dVa(pq[r], pvpq[c]).imag();
                for (int c = 0; c < b; ++c) J(a + r, a + c) = dVm(pq[r], pq[c]).imag();
            }
            Eigen::VectorXd dx = J.partialPivLu().solve(-F);
            if (!dx.allFinite()) break;
            Eigen::VectorXd ang = V.array().arg().matrix(), mag = V.cwiseAbs();
            for (int r = 0; r < a; ++r) ang(pvpq[r]) += dx(r);
            for (int r = 0; r < b; ++r) mag(pq[r]) += dx(a + r);
            for (int i = 0; i < n; ++i) V(i) = std::polar(mag(i), ang(i));
            mismatch(V, F);
            ok = max_abs(F) <= tol;
        }
        out.iterations += it;
        out.V = V;
        out.mismatch = max_abs(F);
        out.converged = ok;
        if (!ok || !enforce_q_limits) return out;
        Eigen::VectorXcd S = V.cwiseProduct((Y * V).conjugate());
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            if (buses[i].type != AcPfBus::PV) continue;
            const double q = S(i).imag();
            if (q > buses[i].q_hi + tol || q < buses[i].q_lo - tol) {
                buses[i].type = AcPfBus::PQ;
                buses[i].q = q > buses[i].q_hi ? buses[i].q_hi : buses[i].q_lo;
                ++out.switched;
                changed = true;
            }
        }
        if (!changed) return out;
    }
    out.converged = false;
    return out;
}

Eigen::VectorXd solve_dc_pf(const Eigen::MatrixXd &G, const std::vector<double> &p, int slack, double v_slack,
                            double tol, int max_iter, bool *converged) {
    const int n = static_cast<int>(G.rows());
    Eigen::VectorXd V = Eigen::VectorXd::Constant(n, v_slack);
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
        if (i != slack) idx.push_back(i);
    const int m = static_cast<int>(idx.size());
    auto mismatch = [&](Eigen::VectorXd &F) {
        Eigen::VectorXd P = V.cwiseProduct(G * V);
        F.resize(m);
        for (int r = 0; r < m; ++r) F(r) = P(idx[r]) - p[idx[r]];
    };
    Eigen::VectorXd F;
    mismatch(F);
    int it = 0;
    while (max_abs(F) > tol && it < max_iter) {
        ++it;
        Eigen::VectorXd GV = G * V;
        Eigen::MatrixXd J(m, m);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c) {
                const int i = idx[r], j = idx[c];
                J(r, c) = V(i) * G(i, j) + (i == j ? GV(i) : 0.0);
            }
        Eigen::VectorXd dx = J.partialPivLu().solve(-F);
        if (!dx.allFinite()) break;
        for (int r = 0; r < m; ++r) V(idx[r]) += dx(r);
        mismatch(F);
    }
    if (converged) *converged = max_abs(F) <= tol;
    return V;
}

namespace {

struct GenIndex {
    int grid, local;
};

std::vector<GenIndex> generator_index(const NetworkCase &net) {
    std::vector<GenIndex> out;
    for (size_t g = 0; g < net.grids.size(); ++g)
        for (size_t k = 0; k < net.grids[g].generators.size(); ++k)
            out.push_back({static_cast<int>(g), static_cast<int>(k)});
    return out;
}

double converter_current(const NetworkCase &net, const Converter &cv, const std::vector<Eigen::VectorXcd> &V) {
    const int ia = net.grid_index(cv.ac_grid);
    return std::abs(V[ia](cv.ac_bus - 1) - V[ia](cv.filter_bus - 1)) / std::abs(cplx(cv.r_c, cv.x_c));
}

Eigen::VectorXcd injections(const Eigen::MatrixXcd &Y, const Eigen::VectorXcd &V) {
    return V.cwiseProduct((Y * V).conjugate());
}

void check_sizes(const NetworkCase &net, const PfSpec &s) {
    size_t ng = 0;
    for (const Grid &g : net.grids) ng += g.generators.size();
    const size_t nc = net.converters.size(), nw = net.wind_farms.size();
    if (s.pg.size() != ng || s.vg.size() != ng || s.pc.size() != nc || s.qc.size() != nc || s.vdc.size() != nc ||
        s.wind_p.size() != nw || s.wind_q.size() != nw)
        throw InputError("power-flow set-point vectors do not match the case");
}

} // namespace

PfSolution evaluate_point(const NetworkCase &net, const std::vector<Eigen::VectorXcd> &V,
                          const std::vector<double> &wind_p, const std::vector<double> &wind_q) {
    if (V.size() != net.grids.size()) throw InputError("one voltage vector per grid required");
    PfSolution out;
    out.V = V;
    out.wind_p = wind_p;
    out.wind_q = wind_q;
    out.converged = true;
    std::vector<Eigen::VectorXcd> S;
    for (size_t g = 0; g < net.grids.size(); ++g) {
        if (V[g].size() != net.grids[g].n()) throw InputError("voltage vector has wrong length");
        S.push_back(injections(build_bus_admittance(net.grids[g]), V[g]));
    }
    auto wind = [&](int gi, int b, bool q) {
        const int w = net.wind_at(net.grids[gi].id, b + 1);
        return w < 0 ? 0.0 : (q ? wind_q[w] : wind_p[w]);
    };
    double res = 0.0;
    for (size_t gi = 0; gi < net.grids.size(); ++gi) {
        const Grid &g = net.grids[gi];
        const bool ac = g.kind == GridKind::AC;
        for (int b = 0; b < g.n(); ++b) {
            const double p = S[gi](b).real() + g.buses[b].p_load - wind(gi, b, false);
            const double q = S[gi](b).imag() + g.buses[b].q_load - wind(gi, b, true);
            const int gen = g.generator_at(b + 1);
            if (gen >= 0) continue;
            if (net.converter_at(g.id, b + 1) >= 0) continue;
            res = std::max(res, std::abs(p));
            if (ac) res = std::max(res, std::abs(q));
        }
        for (const Generator &gen : g.generators) {
            const int b = gen.bus - 1;
            out.pg.push_back(S[gi](b).real() + g.buses[b].p_load - wind(gi, b, false));
            out.qg.push_back(ac ? S[gi](b).imag() + g.buses[b].q_load - wind(gi, b, true) : 0.0);
        }
        out.slack_dev.push_back(0.0);
    }
    for (const Converter &cv : net.converters) {
        const int ia = net.grid_index(cv.ac_grid), id = net.grid_index(cv.dc_grid);
        const int k = cv.ac_bus - 1, s = cv.dc_bus - 1;
        out.pc.push_back(S[ia](k).real() + net.grids[ia].buses[k].p_load);
        out.qc.push_back(S[ia](k).imag() + net.grids[ia].buses[k].q_load);
        out.pcs.push_back(S[id](s).real() + net.grids[id].buses[s].p_load);
        const double I = converter_current(net, cv, V);
        out.current.push_back(I);
        out.loss.push_back(cv.loss_a + cv.loss_c * I * I);
        res = std::max(res, std::abs(out.pc.back() + out.pcs.back() + out.loss.back()));
    }
    out.residual = res;
    return out;
}

PfSolution sequential_acdc_pf(const NetworkCase &net, const PfSpec &spec) {
    check_sizes(net, spec);
    const size_t ngrid = net.grids.size(), nconv = net.converters.size();
    std::vector<Eigen::MatrixXcd> Y;
    for (const Grid &g : net.grids) Y.push_back(build_bus_admittance(g));
    std::vector<int> gen_offset(ngrid, 0);
    for (size_t g = 1; g < ngrid; ++g) gen_offset[g] = gen_offset[g - 1] + static_cast<int>(net.grids[g - 1].generators.size());

    std::vector<int> slack_conv(ngrid, -1);
    for (size_t k = 0; k < nconv; ++k)
        if (net.converters[k].dc_slack) slack_conv[net.grid_index(net.converters[k].dc_grid)] = static_cast<int>(k);

    std::vector<double> pc = spec.pc, pcs(nconv, 0.0);
    std::vector<Eigen::VectorXcd> V(ngrid);
    for (size_t g = 0; g < ngrid; ++g)
        V[g] = (spec.warm.size() == ngrid && spec.warm[g].size() == net.grids[g].n())
                   ? spec.warm[g]
                   : Eigen::VectorXcd::Ones(net.grids[g].n());

    auto wind_at = [&](size_t gi, int b, bool q) {
        const int w = net.wind_at(net.grids[gi].id, b + 1);
        return w < 0 ? 0.0 : (q ? spec.wind_q[w] : spec.wind_p[w]);
    };

    PfSolution out;
    std::vector<double> history;
    bool converged = false;
    int switched = 0;
    for (int outer = 1; outer <= spec.max_outer; ++outer) {
        out.outer_iterations = outer;
        switched = 0;
        for (size_t gi = 0; gi < ngrid; ++gi) {
            const Grid &g = net.grids[gi];
            if (g.kind != GridKind::AC) continue;
            std::vector<AcPfBus> buses(g.n());
            for (int b = 0; b < g.n(); ++b) {
                buses[b].p = -g.buses[b].p_load + wind_at(gi, b, false);
                buses[b].q = -g.buses[b].q_load + wind_at(gi, b, true);
            }
            for (size_t k = 0; k < nconv; ++k) {
                const Converter &cv = net.converters[k];
                if (cv.ac_grid != g.id) continue;
                buses[cv.ac_bus - 1].p += pc[k];
                buses[cv.ac_bus - 1].q += spec.qc[k];
            }
            for (size_t j = 0; j < g.generators.size(); ++j) {
                const Generator &gen = g.generators[j];
                const int gg = gen_offset[gi] + static_cast<int>(j);
                AcPfBus &bus = buses[gen.bus - 1];
                bus.type = gen.bus == g.slack() ? AcPfBus::Slack : AcPfBus::PV;
                bus.v = spec.vg[gg];
                bus.q_lo = bus.q + gen.q_min;
                bus.q_hi = bus.q + gen.q_max;
                bus.p += spec.pg[gg];
            }
            AcPfResult r = solve_ac_pf(Y[gi], buses, spec.tol, spec.max_newton, spec.enforce_q_limits, &V[gi]);
            if (!r.converged) {
                out.message = "AC Newton did not converge in grid " + std::to_string(g.id);
                out.V = V;
                out.converged = false;
                return out;
            }
            V[gi] = r.V;
            switched += r.switched;
        }
        double drift = 0.0;
        for (size_t gi = 0; gi < ngrid; ++gi) {
            const Grid &g = net.grids[gi];
            if (g.kind != GridKind::DC) continue;
            std::vector<double> p(g.n(), 0.0);
            for (int b = 0; b < g.n(); ++b) p[b] = -g.buses[b].p_load + wind_at(gi, b, false);
            for (size_t j = 0; j < g.generators.size(); ++j)
                p[g.generators[j].bus - 1] += spec.pg[gen_offset[gi] + static_cast<int>(j)];
            for (size_t k = 0; k < nconv; ++k) {
                const Converter &cv = net.converters[k];
                if (cv.dc_grid != g.id || static_cast<int>(k) == slack_conv[gi]) continue;
                const double I = converter_current(net, cv, V);
                pcs[k] = -pc[k] - (cv.loss_a + cv.loss_c * I * I);
                p[cv.dc_bus - 1] += pcs[k];
            }
            const int sk = slack_conv[gi];
            if (sk < 0) continue;
            const Converter &sc = net.converters[sk];
            bool ok = false;
            Eigen::VectorXd Vd = solve_dc_pf(Y[gi].real(), p, sc.dc_bus - 1, spec.vdc[sk], spec.tol, spec.max_newton, &ok);
            if (!ok) {
                out.message = "DC Newton did not converge in grid " + std::to_string(g.id);
                out.V = V;
                out.converged = false;
                return out;
            }
            V[gi] = Vd.cast<cplx>();
            const int s = sc.dc_bus - 1;
            const double ps = Vd(s) * Y[gi].real().row(s).dot(Vd);
            pcs[sk] = ps - p[s];
            const double I = converter_current(net, sc, V);
            const double target = -pcs[sk] - (sc.loss_a + sc.loss_c * I * I);
            drift = std::max(drift, std::abs(target - pc[sk]));
            pc[sk] = target;
        }
        history.push_back(drift);
        if (drift <= spec.tol) {
            converged = true;
            break;
        }
        if (history.size() > 5) {
            const double recent = *std::min_element(history.end() - 5, history.end());
            const double before = *std::min_element(history.begin(), history.end() - 5);
            if (recent >= before) {
                out.message = "outer AC/DC iteration oscillates";
                out.V = V;
                out.converged = false;
                return out;
            }
        }
    }
    PfSolution ev = evaluate_point(net, V, spec.wind_p, spec.wind_q);
    ev.outer_iterations = out.outer_iterations;
    ev.switched = switched;
    ev.converged = converged;
    if (!converged) ev.message = "outer AC/DC iteration limit reached";
    ev.slack_dev.assign(ngrid, 0.0);
    for (size_t gi = 0; gi < ngrid; ++gi) {
        const Grid &g = net.grids[gi];
        if (g.kind != GridKind::AC) continue;
        const int j = g.generator_at(g.slack());
        if (j < 0) continue;
        const int gg = gen_offset[gi] + j;
        ev.slack_dev[gi] = ev.pg[gg] - spec.pg[gg];
    }
    return ev;
}

PfSolution agc_redistribution(const NetworkCase &net, const PfSpec &spec, const PfSolution &pf, PfSpec *adjusted) {
    if (!pf.converged) throw NumericError("AGC redistribution needs a converged power flow");
    PfSpec s = spec;
    int gg = 0;
    for (size_t gi = 0; gi < net.grids.size(); ++gi) {
        const Grid &g = net.grids[gi];
        double total = 0.0;
        for (const Generator &gen : g.generators) total += gen.participation;
        for (const Generator &gen : g.generators) {
            if (total > 0.0) s.pg[gg] += pf.slack_dev[gi] * gen.participation / total;
            ++gg;
        }
    }
    s.warm = pf.V;
    PfSolution r = sequential_acdc_pf(net, s);
    if (adjusted) *adjusted = s;
    return r;
}

namespace {

// x0 + sum_v psi_v (x_v - x0)
template <class Get> double mix(const OpfResult &res, const Eigen::VectorXd &psi, Get get) {
    const double x0 = get(res.states.at(0));
    double x = x0;
    for (int v = 0; v < psi.size(); ++v)
        if (psi(v) != 0.0) x += psi(v) * (get(res.states.at(v + 1)) - x0);
    return x;
}

PfSpec blend(const NetworkCase &net, const OpfResult &res, const Eigen::VectorXd &psi, double zsum_policy,
             const std::vector<double> &wind_p) {
    double gamma_hat = 0.0;
    for (int v = 0; v < psi.size(); ++v) gamma_hat += psi(v) * res.gamma.at(v);
    PfSpec spec;
    auto gens = generator_index(net);
    for (size_t g = 0; g < gens.size(); ++g) {
        const int gi = gens[g].grid;
        const Generator &gen = net.grids[gi].generators[gens[g].local];
        spec.pg.push_back(res.states.at(0).pg[g] + gen.participation * (gamma_hat - zsum_policy));
        const int b = gen.bus - 1;
        const double v2 = mix(res, psi, [&](const StateSolution &s) { return s.vm2[gi][b]; });
        spec.vg.push_back(std::sqrt(std::max(v2, 0.0)));
    }
    for (size_t k = 0; k < net.converters.size(); ++k) {
        const Converter &cv = net.converters[k];
        spec.pc.push_back(mix(res, psi, [&](const StateSolution &s) { return s.pc[k]; }));
        spec.qc.push_back(mix(res, psi, [&](const StateSolution &s) { return s.qc[k]; }));
        const int id = net.grid_index(cv.dc_grid);
        const double v2 = mix(res, psi, [&](const StateSolution &s) { return s.vm2[id][cv.dc_bus - 1]; });
        spec.vdc.push_back(std::sqrt(std::max(v2, 0.0)));
    }
    spec.wind_p = wind_p;
    for (size_t f = 0; f < net.wind_farms.size(); ++f) spec.wind_q.push_back(res.tau.at(f) * wind_p[f]);
    return spec;
}

} // namespace

PolicyPoint apply_corrective_control(const NetworkCase &net, const OpfResult &result, const UncertaintyModel &model,
                                     const Eigen::VectorXd &zeta, PsiScheme scheme) {
    PolicyPoint out;
    out.interp = interpolation_weights(model, zeta, scheme);
    std::vector<double> wind_p;
    for (size_t f = 0; f < net.wind_farms.size(); ++f) wind_p.push_back(net.wind_farms[f].forecast + zeta(f));
    out.spec = blend(net, result, out.interp.psi, out.interp.zeta.sum(), wind_p);
    return out;
}

PfSpec state_setpoints(const NetworkCase &net, const OpfResult &result, const OpfContext &ctx, int state) {
    std::vector<double> wind_p;
    for (size_t f = 0; f < net.wind_farms.size(); ++f)
        wind_p.push_back(net.wind_farms[f].forecast + (state == 0 ? 0.0 : ctx.model.vertices[state - 1](f)));
    Eigen::VectorXd psi = Eigen::VectorXd::Zero(ctx.model.n_vertices());
    if (state > 0) psi(state - 1) = 1.0;
    return blend(net, result, psi, ctx.zeta_sum(state), wind_p);
}

double LimitCheck::worst() const { return std::max({gen_p, gen_q, bus_v, flow, converter}); }

LimitCheck check_limits(const NetworkCase &net, const PfSolution &pf, const Deadbands &db) {
    LimitCheck c;
    const double rel = 1.0 + db.relative;
    auto bump = [](double &slot, bool &flag, double excess) {
        if (excess > 0.0) {
            flag = true;
            slot = std::max(slot, excess);
        }
    };
    size_t gg = 0;
    for (size_t gi = 0; gi < net.grids.size(); ++gi) {
        const Grid &g = net.grids[gi];
        const bool ac = g.kind == GridKind::AC;
        for (const Generator &gen : g.generators) {
            const double p = pf.pg[gg], q = pf.qg[gg];
            ++gg;
            bump(c.gen_p, c.violated_gen_p, std::max(p - gen.p_max, gen.p_min - p) - db.gen);
            if (ac) bump(c.gen_q, c.violated_gen_q, std::max(q - gen.q_max, gen.q_min - q) - db.gen);
        }
        const Eigen::VectorXcd &V = pf.V[gi];
        for (int b = 0; b < g.n(); ++b) {
            const double vm = std::abs(V(b));
            bump(c.bus_v, c.violated_bus_v, std::max(vm - g.buses[b].v_max * rel, g.buses[b].v_min * (2.0 - rel) - vm));
        }
        for (const Branch &br : g.branches) {
            if (br.p_limit <= 0.0 && br.s_limit <= 0.0) continue;
            const cplx vl = V(br.from - 1), vm = V(br.to - 1);
            const cplx I = br.y() * (vl - vm) + br.y_sh() * vl;
            const cplx S = vl * std::conj(I);
            if (br.s_limit > 0.0) bump(c.flow, c.violated_flow, std::abs(S) - br.s_limit * rel);
            if (br.p_limit > 0.0) bump(c.flow, c.violated_flow, std::abs(S.real()) - br.p_limit * rel);
        }
    }
    for (size_t k = 0; k < net.converters.size(); ++k) {
        const Converter &cv = net.converters[k];
        const int ia = net.grid_index(cv.ac_grid), id = net.grid_index(cv.dc_grid);
        const double vk = std::abs(pf.V[ia](cv.ac_bus - 1)), vs = std::abs(pf.V[id](cv.dc_bus - 1));
        const double s = std::hypot(pf.pc[k], pf.qc[k]);
        bump(c.converter, c.violated_converter, s - cv.i_max * vk * rel);
        bump(c.converter, c.violated_converter, pf.qc[k] - cv.m_c * cv.s_nom * rel);
        bump(c.converter, c.violated_converter, -cv.m_b * cv.s_nom * rel - pf.qc[k]);
        bump(c.converter, c.violated_converter, vk - cv.modulation * vs * rel);
    }
    return c;
}

std::string pf_csv(const NetworkCase &net, const PfSolution &pf) {
    if (pf.V.size() != net.grids.size()) throw InputError("power-flow solution does not match the case");
    std::ostringstream os;
    os << "record,grid,index,from,to,vm,va_deg,p,q,s,loss\n";
    char buf[256];
    auto num = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.12g", x);
        return std::string(buf);
    };
    for (size_t gi = 0; gi < net.grids.size(); ++gi) {
        const Grid &g = net.grids[gi];
        const Eigen::VectorXcd &V = pf.V[gi];
        for (int b = 0; b < g.n(); ++b)
            os << "bus," << g.id << ',' << g.buses[b].id << ",,," << num(std::abs(V(b))) << ','
               << num(std::arg(V(b)) * 180.0 / M_PI) << ",,,,\n";
        for (size_t l = 0; l < g.branches.size(); ++l) {
            const Branch &br = g.branches[l];
            const cplx vl = V(br.from - 1), vm = V(br.to - 1);
            const cplx S = vl * std::conj(br.y() * (vl - vm) + br.y_sh() * vl);
            os << "branch," << g.id << ',' << l + 1 << ',' << br.from << ',' << br.to << ",,," << num(S.real()) << ','
               << num(S.imag()) << ',' << num(std::abs(S)) << ",\n";
        }
    }
    for (size_t k = 0; k < net.converters.size() && k < pf.pc.size(); ++k)
        os << "converter," << net.converters[k].ac_grid << ',' << k + 1 << ",,,,," << num(pf.pc[k]) << ','
           << num(pf.qc[k]) << ',' << num(std::hypot(pf.pc[k], pf.qc[k])) << ',' << num(pf.loss[k]) << "\n";
    return os.str();
}

} // namespace ccopf

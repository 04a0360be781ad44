#include "ccopf/opf.hpp"
#include "ccopf/errors.hpp"
#include "ccopf/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <set>

namespace ccopf {

const char *to_string(PenaltyMode m) { return m == PenaltyMode::ActiveLoss ? "loss" : "qgen"; }

PenaltyMode parse_penalty_mode(const std::string &s) {
    if (s == "loss") return PenaltyMode::ActiveLoss;
    if (s == "qgen") return PenaltyMode::ReactivePower;
    throw InputError("penalty mode must be loss or qgen, got " + s);
}

double OpfContext::wind_forecast_at(int grid, int bus) const {
    const int w = net->wind_at(net->grids[grid].id, bus + 1);
    return w < 0 ? 0.0 : net->wind_farms[w].forecast;
}

double OpfContext::zeta_at(int state, int grid, int bus) const {
    if (state == 0) return 0.0;
    const int w = net->wind_at(net->grids[grid].id, bus + 1);
    return w < 0 ? 0.0 : model.vertices[state - 1](w);
}

double OpfContext::zeta_sum(int state) const { return state == 0 ? 0.0 : model.vertices[state - 1].sum(); }

OpfContext make_context(const NetworkCase &net, const UncertaintyModel &model, const OpfOptions &opts) {
    if (model.n_w != static_cast<int>(net.wind_farms.size()))
        throw InputError("uncertainty dimension " + std::to_string(model.n_w) + " does not match " +
                         std::to_string(net.wind_farms.size()) + " wind farms");
    auto diags = validate_case(net);
    if (!diags.empty()) throw InputError("invalid case: " + diags.front().path + ": " + diags.front().message);
    OpfContext ctx;
    ctx.net = &net;
    ctx.model = model;
    double scale = 0.0;
    for (const Grid &g : net.grids) {
        ctx.aux.push_back(build_aux_matrices(g));
        ctx.cliques.push_back(merge_cliques(chordal_extension(g), opts.merge_threshold));
        for (const Generator &gen : g.generators)
            scale += gen.c2 * gen.p_max * gen.p_max + gen.c1 * std::abs(gen.p_max) + std::abs(gen.c0);
    }
    for (size_t k = 0; k < net.converters.size(); ++k) ctx.mkf.push_back(converter_mkf(net, static_cast<int>(k)));
    ctx.cost_scale = std::max(1.0, scale);
    return ctx;
}

namespace {

std::string state_tag(int s) { return "s" + std::to_string(s); }

bool is_converter_bus(const NetworkCase &net, const Grid &g, int bus_index) {
    return net.converter_at(g.id, bus_index + 1) >= 0;
}

} // namespace

bool Formulation::has_state(int s) const { return vars_.count(s) > 0; }

Formulation::Formulation(const OpfContext &ctx, FormulationSpec spec) : ctx_(&ctx), spec_(std::move(spec)) {
    const NetworkCase &net = *ctx.net;
    const int nv = ctx.model.n_vertices();
    if (spec_.mu.empty()) spec_.mu.assign(nv, 0.0);
    if (static_cast<int>(spec_.mu.size()) != nv) throw InputError("one penalty weight per vertex required");
    std::sort(spec_.states.begin(), spec_.states.end());
    spec_.states.erase(std::unique(spec_.states.begin(), spec_.states.end()), spec_.states.end());
    if (spec_.states.empty()) throw InputError("no states selected");
    for (int s : spec_.states)
        if (s < 0 || s > nv) throw InputError("state index out of range");

    for (size_t gi = 0; gi < net.grids.size(); ++gi)
        for (const Generator &gen : net.grids[gi].generators) gens_.push_back({static_cast<int>(gi), gen.bus - 1, &gen});

    for (int s : spec_.states) {
        vars_[s].resize(net.grids.size());
        for (size_t gi = 0; gi < net.grids.size(); ++gi) add_grid_variables(s, static_cast<int>(gi));
    }
    const bool forecast = has_state(0);
    alpha_.assign(gens_.size(), -1);
    if (forecast)
        for (size_t g = 0; g < gens_.size(); ++g) alpha_[g] = cs_.add_variable("alpha/" + std::to_string(g));
    gamma_.assign(nv, -1);
    for (int s : spec_.states)
        if (s > 0) gamma_[s - 1] = cs_.add_variable("gamma/" + std::to_string(s - 1));
    tau_.assign(net.wind_farms.size(), -1);
    if (spec_.fixed_tau) {
        if (spec_.fixed_tau->size() != net.wind_farms.size()) throw InputError("one fixed tau per wind farm required");
    } else {
        for (size_t w = 0; w < net.wind_farms.size(); ++w) {
            const WindFarm &wf = net.wind_farms[w];
            if (net.grid(wf.grid).kind != GridKind::AC) continue;
            tau_[w] = cs_.add_variable("tau/" + std::to_string(w));
            const double t = wf.tau_max();
            cs_.add_range("tau/" + std::to_string(w), AffineExpr::var(tau_[w]), -t, t);
        }
    }
    pg0_.assign(gens_.size(), -1);
    copy_ids_.assign(gens_.size(), "");
    if (spec_.fixed_pg0) {
        if (forecast) throw InputError("fixed forecast dispatch conflicts with the forecast state");
        if (spec_.fixed_pg0->size() != gens_.size()) throw InputError("one forecast dispatch per generator required");
        for (size_t g = 0; g < gens_.size(); ++g) {
            pg0_[g] = cs_.add_variable("pg0/" + std::to_string(g));
            copy_ids_[g] = "copy/" + std::to_string(g);
            cs_.add_equality(copy_ids_[g], AffineExpr::var(pg0_[g]) - AffineExpr((*spec_.fixed_pg0)[g]));
        }
    }

    for (int s : spec_.states) {
        add_state_constraints(s);
        add_converter_constraints(s);
        if (s > 0 && (forecast || spec_.fixed_pg0)) add_coupling(s);
    }

    const double inv = 1.0 / ctx.cost_scale;
    AffineExpr obj;
    if (forecast) {
        for (size_t g = 0; g < gens_.size(); ++g) {
            const Generator &gen = *gens_[g].gen;
            AffineExpr P = p_injection(0, gens_[g].grid, gens_[g].bus);
            AffineExpr a = AffineExpr::var(alpha_[g]);
            AffineExpr lin = inv * (gen.c1 * P + AffineExpr(gen.c0));
            const std::string id = "cost/" + std::to_string(g);
            if (gen.c2 > 0.0) {
                auto &l = cs_.add_lmi(id, 2);
                l.at(0, 0) = a - lin;
                l.at(0, 1) = std::sqrt(gen.c2 * inv) * P;
                l.at(1, 1) = AffineExpr(1.0);
            } else {
                cs_.add_inequality(id, a - lin);
            }
            obj += a;
        }
    }
    for (int s : spec_.states) {
        if (s == 0) continue;
        const double mu = spec_.mu[s - 1];
        if (spec_.feasibility_slacks || mu == 0.0) continue;
        if (spec_.mode == PenaltyMode::ActiveLoss) {
            obj += AffineExpr::var(gamma_[s - 1], mu * inv);
        } else {
            for (const GenRef &g : gens_)
                if (net.grids[g.grid].kind == GridKind::AC) obj += (mu * inv) * q_injection(s, g.grid, g.bus);
        }
    }
    if (spec_.master_theta) {
        if (!forecast) throw InputError("master problem needs the forecast state");
        bool any_opt = false;
        for (const auto &c : spec_.cuts) any_opt |= !c.feasibility;
        if (any_opt) {
            theta_ = cs_.add_variable("theta");
            obj += AffineExpr::var(theta_, inv);
        } else {
            obj += AffineExpr(spec_.theta_min * inv);
        }
        for (size_t j = 0; j < spec_.cuts.size(); ++j) {
            const auto &cut = spec_.cuts[j];
            if (cut.grad.size() != gens_.size() || cut.anchor.size() != gens_.size()) throw InputError("malformed cut");
            AffineExpr e(cut.value);
            for (size_t g = 0; g < gens_.size(); ++g) {
                if (cut.grad[g] == 0.0) continue;
                AffineExpr P = p_injection(0, gens_[g].grid, gens_[g].bus);
                P -= AffineExpr(cut.anchor[g]);
                e += cut.grad[g] * P;
            }
            if (cut.feasibility) {
                cs_.add_inequality("fcut/" + std::to_string(j), -inv * e);
            } else {
                AffineExpr t = AffineExpr::var(theta_);
                cs_.add_inequality("ocut/" + std::to_string(j), inv * (t - e));
            }
        }
    }
    cs_.add_objective(obj);
}

void Formulation::add_grid_variables(int state, int grid) {
    const CliqueStructure &cs = ctx_->cliques[grid];
    const bool ac = ctx_->net->grids[grid].kind == GridKind::AC;
    GridVars &gv = vars_[state][grid];
    const size_t nc = cs.cliques.size();
    gv.re.resize(nc);
    gv.im.resize(nc);
    const std::string base = state_tag(state) + "/g" + std::to_string(ctx_->net->grids[grid].id);
    std::map<PairKey, int> shared_re, shared_im;
    for (size_t c = 0; c < nc; ++c) {
        const auto &cl = cs.cliques[c];
        for (size_t i = 0; i < cl.size(); ++i)
            for (size_t j = i; j < cl.size(); ++j) {
                PairKey key{cl[i], cl[j]};
                const std::string tag = std::to_string(cl[i] + 1) + "," + std::to_string(cl[j] + 1);
                if (spec_.overlap == OverlapMode::Shared) {
                    auto it = shared_re.find(key);
                    if (it == shared_re.end())
                        it = shared_re.emplace(key, cs_.add_variable(base + "/re/" + tag)).first;
                    gv.re[c][key] = it->second;
                    if (ac && i != j) {
                        auto jt = shared_im.find(key);
                        if (jt == shared_im.end())
                            jt = shared_im.emplace(key, cs_.add_variable(base + "/im/" + tag)).first;
                        gv.im[c][key] = jt->second;
                    }
                } else {
                    const std::string cb = base + "/c" + std::to_string(c);
                    gv.re[c][key] = cs_.add_variable(cb + "/re/" + tag);
                    if (ac && i != j) gv.im[c][key] = cs_.add_variable(cb + "/im/" + tag);
                }
            }
    }
}

int Formulation::var_re(int state, int grid, int a, int b) const {
    if (a > b) std::swap(a, b);
    const int c = ctx_->cliques[grid].owner(a, b);
    if (c < 0) throw NumericError("operator touches an entry outside the chordal pattern");
    return vars_.at(state)[grid].re[c].at({a, b});
}

int Formulation::var_im(int state, int grid, int a, int b) const {
    const int c = ctx_->cliques[grid].owner(a, b);
    if (c < 0) throw NumericError("operator touches an entry outside the chordal pattern");
    return vars_.at(state)[grid].im[c].at({a, b});
}

AffineExpr Formulation::trace(const SparseSym &op, int state, int grid) const {
    const int n = ctx_->aux[grid].n;
    const bool ac = ctx_->net->grids[grid].kind == GridKind::AC;
    AffineExpr e;
    for (const auto &en : op.entries()) {
        const double f = (en.row == en.col ? 1.0 : 2.0) * en.value;
        const int a = en.row % n, b = en.col % n;
        const int pa = en.row / n, pb = en.col / n;
        if (pa == pb) {
            e.add(var_re(state, grid, a, b), 0.5 * f);
            continue;
        }
        if (a == b || !ac) continue;
        // W(a re, b im) = -1/2 I_ab, W(a im, b re) = 1/2 I_ab, I antisymmetric
        const double sgn = (pa == 0 ? -0.5 : 0.5) * (a < b ? 1.0 : -1.0);
        e.add(var_im(state, grid, std::min(a, b), std::max(a, b)), sgn * f);
    }
    e.compress();
    return e;
}

AffineExpr Formulation::p_injection(int state, int grid, int bus) const {
    AffineExpr e = trace(ctx_->aux[grid].Yk[bus], state, grid);
    const double pd = ctx_->net->grids[grid].buses[bus].p_load;
    e += AffineExpr(pd - ctx_->wind_forecast_at(grid, bus) - ctx_->zeta_at(state, grid, bus));
    return e;
}

AffineExpr Formulation::q_injection(int state, int grid, int bus) const {
    AffineExpr e = trace(ctx_->aux[grid].Ybark[bus], state, grid);
    e += AffineExpr(ctx_->net->grids[grid].buses[bus].q_load);
    const int w = ctx_->net->wind_at(ctx_->net->grids[grid].id, bus + 1);
    if (w >= 0) {
        const double pw = ctx_->wind_forecast_at(grid, bus) + ctx_->zeta_at(state, grid, bus);
        if (spec_.fixed_tau)
            e += AffineExpr(-(*spec_.fixed_tau)[w] * pw);
        else if (tau_[w] >= 0)
            e.add(tau_[w], -pw);
    }
    return e;
}

void Formulation::add_state_constraints(int s) {
    const NetworkCase &net = *ctx_->net;
    const std::string st = state_tag(s);
    const bool slacks = spec_.feasibility_slacks && s > 0;
    AffineExpr slack_sum;
    for (size_t gi = 0; gi < net.grids.size(); ++gi) {
        const Grid &g = net.grids[gi];
        const int G = static_cast<int>(gi);
        const AuxiliaryMatrices &aux = ctx_->aux[gi];
        const CliqueStructure &cq = ctx_->cliques[gi];
        const bool ac = g.kind == GridKind::AC;
        const std::string gt = st + "/g" + std::to_string(g.id);
        for (int b = 0; b < g.n(); ++b) {
            const Bus &bus = g.buses[b];
            const std::string bt = gt + "/b" + std::to_string(b + 1);
            if (!is_converter_bus(net, g, b)) {
                const int gen = g.generator_at(bus.id);
                const double plo = gen >= 0 ? g.generators[gen].p_min : 0.0;
                const double phi = gen >= 0 ? g.generators[gen].p_max : 0.0;
                const double qlo = gen >= 0 ? g.generators[gen].q_min : 0.0;
                const double qhi = gen >= 0 ? g.generators[gen].q_max : 0.0;
                AffineExpr P = p_injection(s, G, b);
                AffineExpr Q;
                if (ac) Q = q_injection(s, G, b);
                if (slacks) {
                    int sp_lo = cs_.add_variable(bt + "/slack/p_lo"), sp_hi = cs_.add_variable(bt + "/slack/p_hi");
                    cs_.add_inequality(bt + "/slack/p_lo", AffineExpr::var(sp_lo));
                    cs_.add_inequality(bt + "/slack/p_hi", AffineExpr::var(sp_hi));
                    cs_.add_inequality(bt + "/p/lo", P - AffineExpr(plo) + AffineExpr::var(sp_lo));
                    cs_.add_inequality(bt + "/p/hi", AffineExpr(phi) - P + AffineExpr::var(sp_hi));
                    slack_sum += AffineExpr::var(sp_lo) + AffineExpr::var(sp_hi);
                    if (ac) {
                        int sq_lo = cs_.add_variable(bt + "/slack/q_lo"), sq_hi = cs_.add_variable(bt + "/slack/q_hi");
                        cs_.add_inequality(bt + "/slack/q_lo", AffineExpr::var(sq_lo));
                        cs_.add_inequality(bt + "/slack/q_hi", AffineExpr::var(sq_hi));
                        cs_.add_inequality(bt + "/q/lo", Q - AffineExpr(qlo) + AffineExpr::var(sq_lo));
                        cs_.add_inequality(bt + "/q/hi", AffineExpr(qhi) - Q + AffineExpr::var(sq_hi));
                        slack_sum += AffineExpr::var(sq_lo) + AffineExpr::var(sq_hi);
                    }
                } else {
                    cs_.add_range(bt + "/p", P, plo, phi);
                    if (ac) cs_.add_range(bt + "/q", Q, qlo, qhi);
                }
            }
            cs_.add_range(bt + "/v", trace(aux.Mk[b], s, G), bus.v_min * bus.v_min, bus.v_max * bus.v_max);
        }
        for (size_t l = 0; l < g.branches.size(); ++l) {
            const Branch &br = g.branches[l];
            const std::string lt = gt + "/l" + std::to_string(l + 1);
            if (br.p_limit > 0.0) cs_.add_range(lt + "/p", trace(aux.Ylm[l], s, G), -br.p_limit, br.p_limit);
            if (br.s_limit > 0.0) {
                auto &m = cs_.add_lmi(lt + "/s", 3);
                m.at(0, 0) = AffineExpr(br.s_limit * br.s_limit);
                m.at(0, 1) = trace(aux.Ylm[l], s, G);
                m.at(0, 2) = ac ? trace(aux.Ybarlm[l], s, G) : AffineExpr(0.0);
                m.at(1, 1) = AffineExpr(1.0);
                m.at(1, 2) = AffineExpr(0.0);
                m.at(2, 2) = AffineExpr(1.0);
            }
        }
        // clique PSD blocks: [[R, -I],[I, R]] for AC, R for DC
        for (size_t c = 0; c < cq.cliques.size(); ++c) {
            const auto &cl = cq.cliques[c];
            const int k = static_cast<int>(cl.size());
            const GridVars &gv = vars_.at(s)[gi];
            auto &m = cs_.add_lmi(gt + "/psd/c" + std::to_string(c), ac ? 2 * k : k);
            for (int i = 0; i < k; ++i)
                for (int j = i; j < k; ++j) {
                    const int r = gv.re[c].at({cl[i], cl[j]});
                    m.at(i, j) = AffineExpr::var(r);
                    if (ac) {
                        m.at(k + i, k + j) = AffineExpr::var(r);
                        if (i != j) {
                            const int im = gv.im[c].at({cl[i], cl[j]});
                            // (i re, j im) = -I_ij ; (j re, i im) = -I_ji = I_ij
                            m.at(i, k + j) = AffineExpr::var(im, -1.0);
                            m.at(j, k + i) = AffineExpr::var(im, 1.0);
                        }
                    }
                }
        }
        if (spec_.overlap == OverlapMode::Explicit) {
            const GridVars &gv = vars_.at(s)[gi];
            for (const OverlapLink &lk : cq.links) {
                const auto &sh = lk.shared;
                for (size_t i = 0; i < sh.size(); ++i)
                    for (size_t j = i; j < sh.size(); ++j) {
                        PairKey key{sh[i], sh[j]};
                        const std::string tag = gt + "/link/c" + std::to_string(lk.child) + "/" +
                                                std::to_string(sh[i] + 1) + "," + std::to_string(sh[j] + 1);
                        cs_.add_equality(tag + "/re", AffineExpr::var(gv.re[lk.child].at(key)) -
                                                          AffineExpr::var(gv.re[lk.parent].at(key)));
                        if (ac && i != j)
                            cs_.add_equality(tag + "/im", AffineExpr::var(gv.im[lk.child].at(key)) -
                                                              AffineExpr::var(gv.im[lk.parent].at(key)));
                    }
            }
        }
    }
    if (slacks) cs_.add_objective(slack_sum);
}

void Formulation::add_converter_constraints(int s) {
    const NetworkCase &net = *ctx_->net;
    for (size_t k = 0; k < net.converters.size(); ++k) {
        const Converter &cv = net.converters[k];
        const int ia = net.grid_index(cv.ac_grid), id = net.grid_index(cv.dc_grid);
        const Grid &ga = net.grids[ia], &gd = net.grids[id];
        const int kb = cv.ac_bus - 1, sb = cv.dc_bus - 1;
        const std::string ct = state_tag(s) + "/conv" + std::to_string(k + 1);
        AffineExpr Pk = trace(ctx_->aux[ia].Yk[kb], s, ia) + AffineExpr(ga.buses[kb].p_load);
        AffineExpr Qk = trace(ctx_->aux[ia].Ybark[kb], s, ia) + AffineExpr(ga.buses[kb].q_load);
        AffineExpr Ps = trace(ctx_->aux[id].Yk[sb], s, id) + AffineExpr(gd.buses[sb].p_load);
        AffineExpr Mk = trace(ctx_->aux[ia].Mk[kb], s, ia);
        AffineExpr Ms = trace(ctx_->aux[id].Mk[sb], s, id);
        AffineExpr bal = Pk + Ps + AffineExpr(cv.loss_a) + cv.z() * trace(ctx_->mkf[k], s, ia);
        cs_.add_equality(ct + "/balance", bal);
        cs_.add_inequality(ct + "/modulation", cv.modulation * cv.modulation * Ms - Mk);
        cs_.add_range(ct + "/q", Qk, -cv.m_b * cv.s_nom, cv.m_c * cv.s_nom);
        auto &m = cs_.add_lmi(ct + "/current", 3);
        m.at(0, 0) = cv.i_max * cv.i_max * Mk;
        m.at(0, 1) = Pk;
        m.at(0, 2) = Qk;
        m.at(1, 1) = AffineExpr(1.0);
        m.at(1, 2) = AffineExpr(0.0);
        m.at(2, 2) = AffineExpr(1.0);
    }
}

void Formulation::add_coupling(int s) {
    const int v = s - 1;
    const double zsum = ctx_->zeta_sum(s);
    for (size_t g = 0; g < gens_.size(); ++g) {
        const GenRef &gr = gens_[g];
        const double d = gr.gen->participation;
        AffineExpr P0 = spec_.fixed_pg0 ? AffineExpr::var(pg0_[g]) : p_injection(0, gr.grid, gr.bus);
        AffineExpr e = p_injection(s, gr.grid, gr.bus) - P0;
        e.add(gamma_[v], -d);
        e += AffineExpr(d * zsum);
        cs_.add_equality(state_tag(s) + "/couple/" + std::to_string(g), e);
    }
}

std::vector<Eigen::MatrixXcd> Formulation::clique_blocks(const Eigen::VectorXd &y, int state, int grid) const {
    const CliqueStructure &cq = ctx_->cliques[grid];
    const GridVars &gv = vars_.at(state)[grid];
    std::vector<Eigen::MatrixXcd> out;
    for (size_t c = 0; c < cq.cliques.size(); ++c) {
        const auto &cl = cq.cliques[c];
        const int k = static_cast<int>(cl.size());
        Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(k, k);
        for (int i = 0; i < k; ++i)
            for (int j = i; j < k; ++j) {
                const double re = y(gv.re[c].at({cl[i], cl[j]}));
                double im = 0.0;
                if (i != j) {
                    auto it = gv.im[c].find({cl[i], cl[j]});
                    if (it != gv.im[c].end()) im = y(it->second);
                }
                H(i, j) = cplx(re, im);
                H(j, i) = cplx(re, -im);
            }
        out.push_back(H);
    }
    return out;
}

Eigen::MatrixXd lift_hermitian(const Eigen::MatrixXcd &H) {
    const Eigen::Index k = H.rows();
    Eigen::MatrixXd W(2 * k, 2 * k);
    W.topLeftCorner(k, k) = H.real();
    W.bottomRightCorner(k, k) = H.real();
    W.topRightCorner(k, k) = -H.imag();
    W.bottomLeftCorner(k, k) = H.imag();
    return 0.5 * W;
}

namespace {

Eigen::VectorXd descending_eigenvalues(const Eigen::MatrixXd &A) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly);
    Eigen::VectorXd d = es.eigenvalues().reverse();
    return d;
}

} // namespace

double eig_ratio(const Eigen::MatrixXd &block) {
    if (block.rows() < 3) return kInfinity;
    Eigen::VectorXd d = descending_eigenvalues(block);
    if (d(2) <= 1e-12 * d(0)) return kInfinity;
    return d(1) / d(2);
}

double eig_ratio_top(const Eigen::MatrixXd &block) {
    if (block.rows() < 2) return kInfinity;
    Eigen::VectorXd d = descending_eigenvalues(block);
    if (d(1) <= 1e-12 * d(0)) return kInfinity;
    return d(0) / d(1);
}

Eigen::VectorXcd recover_voltages(const CliqueStructure &cs, const std::vector<Eigen::MatrixXcd> &H, int reference,
                                  bool dc) {
    if (H.size() != cs.cliques.size()) throw InputError("one block per clique required");
    Eigen::VectorXcd V = Eigen::VectorXcd::Zero(cs.n);
    std::vector<bool> set(cs.n, false);
    for (int c : cs.topological()) {
        const auto &cl = cs.cliques[c];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H[c]);
        const Eigen::Index top = H[c].rows() - 1;
        Eigen::VectorXcd v = std::sqrt(std::max(es.eigenvalues()(top), 0.0)) * es.eigenvectors().col(top);
        cplx acc(0.0, 0.0);
        for (size_t i = 0; i < cl.size(); ++i)
            if (set[cl[i]]) acc += std::conj(v(i)) * V(cl[i]);
        if (std::abs(acc) > 0.0) v *= acc / std::abs(acc);
        for (size_t i = 0; i < cl.size(); ++i) {
            if (set[cl[i]]) {
                if (std::abs(V(cl[i])) > 1e-9 && std::abs(v(i)) > 1e-9 && std::abs(std::arg(v(i) / V(cl[i]))) > 1e-4)
                    throw NumericError("overlap phase mismatch at bus " + std::to_string(cl[i] + 1));
            } else {
                V(cl[i]) = v(i);
                set[cl[i]] = true;
            }
        }
    }
    if (reference >= 0 && reference < cs.n && std::abs(V(reference)) > 0.0) V *= std::abs(V(reference)) / V(reference);
    if (dc) {
        if (V.imag().cwiseAbs().maxCoeff() > 1e-6) throw NumericError("DC grid voltage has an imaginary part");
        V = V.real().cast<cplx>();
    }
    return V;
}

double generation_cost(const NetworkCase &net, const std::vector<double> &pg) {
    double c = 0.0;
    size_t g = 0;
    for (const Grid &grid : net.grids)
        for (const Generator &gen : grid.generators) {
            const double p = pg.at(g++);
            c += gen.c2 * p * p + gen.c1 * p + gen.c0;
        }
    return c;
}

OpfResult solve_fixed(const OpfContext &ctx, const FormulationSpec &spec, const SolverOptions &solver, bool recover,
                      int jobs) {
    const NetworkCase &net = *ctx.net;
    Formulation f(ctx, spec);
    ConicProblem p = assemble_standard_form(f.constraints());
    ConicSolution sol = solve_sdp(p, solver);
    OpfResult r;
    r.status = sol.status;
    r.mode = spec.mode;
    r.mu = f.spec().mu;
    if (sol.status == SolveStatus::Infeasible) throw InfeasibleError("OPF relaxation infeasible (solver status Infeasible)");
    if (sol.status != SolveStatus::Optimal)
        throw NumericError(std::string("OPF solve failed with status ") + to_string(sol.status) +
                           (sol.message.empty() ? "" : ": " + sol.message));
    const Eigen::VectorXd &y = sol.y;
    const double scale = spec.feasibility_slacks ? 1.0 : ctx.cost_scale;
    r.objective = scale * sol.model_objective(p);
    if (spec.fixed_pg0) {
        for (size_t g = 0; g < f.generators().size(); ++g) {
            const auto &labels = p.free.labels;
            const auto it = std::find(labels.begin(), labels.end(), f.copy_id(static_cast<int>(g)));
            r.copy_duals.push_back(it == labels.end() ? 0.0 : scale * sol.u_free(it - labels.begin()));
        }
    }
    if (f.theta_var() >= 0)
        r.theta = y(f.theta_var());
    else if (spec.master_theta)
        r.theta = spec.theta_min;

    const int nv = ctx.model.n_vertices();
    r.gamma.assign(nv, 0.0);
    for (int v = 0; v < nv; ++v)
        if (f.gamma_var(v) >= 0) r.gamma[v] = y(f.gamma_var(v));
    r.tau.assign(net.wind_farms.size(), 0.0);
    for (size_t w = 0; w < net.wind_farms.size(); ++w) {
        if (spec.fixed_tau)
            r.tau[w] = (*spec.fixed_tau)[w];
        else if (f.tau_var(static_cast<int>(w)) >= 0)
            r.tau[w] = y(f.tau_var(static_cast<int>(w)));
    }
    if (f.has_state(0)) {
        double gc = 0.0;
        for (size_t g = 0; g < f.generators().size(); ++g) gc += y(f.alpha_var(static_cast<int>(g)));
        r.generation_cost = scale * gc;
    }
    r.penalty = r.objective - r.generation_cost - (spec.master_theta ? r.theta : 0.0);

    r.states.resize(ctx.n_states());
    const std::vector<int> &states = f.spec().states;
    parallel_for(static_cast<int>(states.size()), jobs, [&](int idx) {
        const int s = states[idx];
        StateSolution &ss = r.states[s];
        for (size_t gi = 0; gi < net.grids.size(); ++gi) {
            const int G = static_cast<int>(gi);
            ss.H.push_back(f.clique_blocks(y, s, G));
            std::vector<double> rho, rho1;
            for (const auto &H : ss.H.back()) {
                Eigen::MatrixXd W = lift_hermitian(H);
                rho.push_back(eig_ratio(W));
                rho1.push_back(eig_ratio_top(W));
                ss.min_rho = std::min(ss.min_rho, rho.back());
            }
            ss.rho.push_back(rho);
            ss.rho1.push_back(rho1);
            std::vector<double> vm;
            for (int b = 0; b < net.grids[gi].n(); ++b) vm.push_back(f.trace(ctx.aux[gi].Mk[b], s, G).eval(y));
            ss.vm2.push_back(vm);
        }
        for (const auto &g : f.generators()) {
            ss.pg.push_back(f.p_injection(s, g.grid, g.bus).eval(y));
            ss.qg.push_back(net.grids[g.grid].kind == GridKind::AC ? f.q_injection(s, g.grid, g.bus).eval(y) : 0.0);
        }
        for (size_t k = 0; k < net.converters.size(); ++k) {
            const Converter &cv = net.converters[k];
            const int ia = net.grid_index(cv.ac_grid), id = net.grid_index(cv.dc_grid);
            const int kb = cv.ac_bus - 1, sb = cv.dc_bus - 1;
            ss.pc.push_back(f.trace(ctx.aux[ia].Yk[kb], s, ia).eval(y) + net.grids[ia].buses[kb].p_load);
            ss.qc.push_back(f.trace(ctx.aux[ia].Ybark[kb], s, ia).eval(y) + net.grids[ia].buses[kb].q_load);
            ss.pcs.push_back(f.trace(ctx.aux[id].Yk[sb], s, id).eval(y) + net.grids[id].buses[sb].p_load);
        }
        if (recover) {
            try {
                for (size_t gi = 0; gi < net.grids.size(); ++gi) {
                    const Grid &g = net.grids[gi];
                    const bool dc = g.kind == GridKind::DC;
                    const int ref = dc ? 0 : g.slack() - 1;
                    ss.V.push_back(recover_voltages(ctx.cliques[gi], ss.H[gi], ref, dc));
                }
                ss.recovered = true;
            } catch (const NumericError &) {
                ss.V.clear();
                ss.recovered = false;
            }
        }
    });
    return r;
}

namespace {

FormulationSpec full_spec(const OpfContext &ctx, const OpfOptions &opts, const std::vector<double> &mu) {
    FormulationSpec spec;
    for (int s = 0; s < ctx.n_states(); ++s) spec.states.push_back(s);
    spec.mu = mu;
    spec.mode = opts.mode;
    spec.overlap = opts.overlap;
    return spec;
}

} // namespace

OpfResult penalty_loop(const OpfContext &ctx, const OpfOptions &opts) {
    if (!(opts.delta_mu > 0.0)) throw InputError("penalty step must be positive");
    const int nv = ctx.model.n_vertices();
    std::vector<double> mu(nv, 0.0), last_mu = mu;
    std::vector<int> last_raised;
    bool halved = false;
    double f1 = 0.0;
    std::vector<PenaltyIteration> trace;
    for (int it = 1; it <= opts.max_iter; ++it) {
        OpfResult r = solve_fixed(ctx, full_spec(ctx, opts, mu), opts.solver, true, opts.jobs);
        if (it == 1) f1 = r.generation_cost;
        PenaltyIteration rec;
        rec.iteration = it;
        rec.mu = mu;
        for (const auto &s : r.states) rec.min_rho.push_back(s.min_rho);
        rec.generation_cost = r.generation_cost;
        rec.penalty = r.penalty;
        trace.push_back(rec);

        std::vector<int> failing;
        for (int v = 0; v < nv; ++v)
            if (r.states[v + 1].min_rho < opts.rho_threshold) failing.push_back(v);
        const bool forecast_ok = r.states[0].min_rho >= opts.rho_threshold;
        bool all_recovered = true;
        for (const auto &s : r.states) all_recovered &= s.recovered;

        auto finish = [&](bool ok, std::string msg) {
            r.iterations = it;
            r.trace = trace;
            r.unpenalized_cost = f1;
            r.delta_opt = r.generation_cost > 0.0 ? 100.0 * f1 / r.generation_cost : 0.0;
            r.rank_ok = ok;
            r.message = std::move(msg);
            r.mu = mu;
            return r;
        };
        if (forecast_ok && failing.empty()) {
            if (!all_recovered) throw NumericError("rank test passed but voltage recovery failed");
            return finish(true, "");
        }
        if (it == opts.max_iter) return finish(false, "penalty loop reached the iteration limit");
        if (!forecast_ok) {
            if (!last_raised.empty()) {
                if (halved) throw NumericError("over-penalization: forecast state lost rank after a penalty increase");
                mu = last_mu;
                for (int v : last_raised) mu[v] += 0.5 * opts.delta_mu;
                halved = true;
                continue;
            }
            // forecast state not exact at zero penalty: penalise every vertex
            failing.clear();
            for (int v = 0; v < nv; ++v) failing.push_back(v);
            if (failing.empty()) return finish(false, "forecast state is not rank-1 and there is no vertex to penalise");
        }
        last_mu = mu;
        last_raised = failing;
        for (int v : failing) mu[v] += opts.delta_mu;
    }
    throw NumericError("penalty loop did not run");
}

} // namespace ccopf

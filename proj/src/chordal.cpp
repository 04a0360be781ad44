#include "ccopf/chordal.hpp"
#include "ccopf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <sstream>

namespace ccopf {

namespace {

using AdjSets = std::vector<std::set<int>>;

AdjSets adjacency(int n, const std::vector<Edge> &edges) {
    AdjSets adj(n);
    for (auto [a, b] : edges) {
        if (a == b) continue;
        adj[a].insert(b);
        adj[b].insert(a);
    }
    return adj;
}

std::vector<Edge> normalized(const std::vector<Edge> &edges) {
    std::set<Edge> s;
    for (auto [a, b] : edges)
        if (a != b) s.insert({std::min(a, b), std::max(a, b)});
    return {s.begin(), s.end()};
}

std::vector<std::vector<int>> components(int n, const AdjSets &adj) {
    std::vector<int> comp(n, -1);
    std::vector<std::vector<int>> out;
    for (int s = 0; s < n; ++s) {
        if (comp[s] >= 0) continue;
        std::vector<int> members;
        std::queue<int> q;
        q.push(s);
        comp[s] = static_cast<int>(out.size());
        while (!q.empty()) {
            int v = q.front();
            q.pop();
            members.push_back(v);
            for (int w : adj[v])
                if (comp[w] < 0) {
                    comp[w] = comp[s];
                    q.push(w);
                }
        }
        std::sort(members.begin(), members.end());
        out.push_back(members);
    }
    return out;
}

bool subset(const std::vector<int> &a, const std::vector<int> &b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

std::vector<int> intersect(const std::vector<int> &a, const std::vector<int> &b) {
    std::vector<int> r;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(r));
    return r;
}

std::vector<int> unite(const std::vector<int> &a, const std::vector<int> &b) {
    std::vector<int> r;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(r));
    return r;
}

// Maximum-weight spanning tree over clique intersections (Prim from clique 0,
// lowest index wins ties). Fills parent and links.
void build_clique_tree(CliqueStructure &cs) {
    const int m = static_cast<int>(cs.cliques.size());
    cs.parent.assign(m, -1);
    cs.links.clear();
    if (m == 0) return;
    std::vector<bool> in(m, false);
    std::vector<int> best(m, -1), from(m, -1);
    in[0] = true;
    for (int j = 1; j < m; ++j) {
        best[j] = static_cast<int>(intersect(cs.cliques[0], cs.cliques[j]).size());
        from[j] = 0;
    }
    for (int step = 1; step < m; ++step) {
        int pick = -1;
        for (int j = 0; j < m; ++j)
            if (!in[j] && (pick < 0 || best[j] > best[pick])) pick = j;
        in[pick] = true;
        cs.parent[pick] = from[pick];
        for (int j = 0; j < m; ++j) {
            if (in[j]) continue;
            int w = static_cast<int>(intersect(cs.cliques[pick], cs.cliques[j]).size());
            if (w > best[j]) {
                best[j] = w;
                from[j] = pick;
            }
        }
    }
    for (int j = 0; j < m; ++j)
        if (cs.parent[j] >= 0) cs.links.push_back({cs.parent[j], j, intersect(cs.cliques[cs.parent[j]], cs.cliques[j])});
}

void recompute_fill(CliqueStructure &cs) {
    std::set<Edge> orig(cs.edges.begin(), cs.edges.end());
    std::set<Edge> fill;
    for (const auto &c : cs.cliques)
        for (size_t a = 0; a < c.size(); ++a)
            for (size_t b = a + 1; b < c.size(); ++b)
                if (!orig.count({c[a], c[b]})) fill.insert({c[a], c[b]});
    cs.fill_edges.assign(fill.begin(), fill.end());
}

} // namespace

std::vector<int> CliqueStructure::topological() const {
    const int m = static_cast<int>(cliques.size());
    std::vector<int> out;
    std::vector<std::vector<int>> kids(m);
    int root = -1;
    for (int j = 0; j < m; ++j) {
        if (parent[j] < 0)
            root = j;
        else
            kids[parent[j]].push_back(j);
    }
    if (root < 0) return out;
    std::queue<int> q;
    q.push(root);
    while (!q.empty()) {
        int v = q.front();
        q.pop();
        out.push_back(v);
        for (int k : kids[v]) q.push(k);
    }
    return out;
}

int CliqueStructure::owner(int i, int j) const {
    for (size_t c = 0; c < cliques.size(); ++c) {
        const auto &cl = cliques[c];
        if (std::binary_search(cl.begin(), cl.end(), i) && std::binary_search(cl.begin(), cl.end(), j))
            return static_cast<int>(c);
    }
    return -1;
}

std::vector<Edge> grid_edges(const Grid &g) {
    std::vector<Edge> e;
    for (const Branch &br : g.branches) e.push_back({br.from - 1, br.to - 1});
    return normalized(e);
}

CliqueStructure chordal_extension(int n, const std::vector<Edge> &edges_in, bool lifted_ac) {
    CliqueStructure cs;
    cs.n = n;
    cs.lifted_ac = lifted_ac;
    cs.edges = normalized(edges_in);
    AdjSets adj = adjacency(n, cs.edges);

    auto comps = components(n, adj);
    if (comps.size() > 1) {
        std::ostringstream msg;
        msg << "disconnected graph, components:";
        for (const auto &c : comps) {
            msg << " {";
            for (size_t i = 0; i < c.size(); ++i) msg << (i ? "," : "") << c[i] + 1;
            msg << "}";
        }
        throw InputError(msg.str());
    }

    // Minimum-degree elimination on the (shrinking) filled graph.
    AdjSets work = adj;
    std::vector<bool> gone(n, false);
    std::set<Edge> fill;
    std::vector<std::vector<int>> candidates;
    for (int step = 0; step < n; ++step) {
        int v = -1;
        for (int u = 0; u < n; ++u)
            if (!gone[u] && (v < 0 || work[u].size() < work[v].size())) v = u;
        std::vector<int> nb(work[v].begin(), work[v].end());
        for (size_t a = 0; a < nb.size(); ++a)
            for (size_t b = a + 1; b < nb.size(); ++b) {
                int x = nb[a], y = nb[b];
                if (!work[x].count(y)) {
                    work[x].insert(y);
                    work[y].insert(x);
                    fill.insert({std::min(x, y), std::max(x, y)});
                }
            }
        std::vector<int> clique = nb;
        clique.push_back(v);
        std::sort(clique.begin(), clique.end());
        candidates.push_back(clique);
        for (int u : nb) work[u].erase(v);
        work[v].clear();
        gone[v] = true;
        cs.order.push_back(v);
    }
    cs.fill_edges.assign(fill.begin(), fill.end());

    std::vector<std::vector<int>> maximal;
    for (size_t i = 0; i < candidates.size(); ++i) {
        bool keep = true;
        for (size_t j = 0; j < candidates.size() && keep; ++j) {
            if (i == j) continue;
            const auto &a = candidates[i], &b = candidates[j];
            if (subset(a, b) && (a.size() < b.size() || j < i)) keep = false;
        }
        if (keep) maximal.push_back(candidates[i]);
    }
    std::sort(maximal.begin(), maximal.end());
    cs.cliques = maximal;
    build_clique_tree(cs);
    return cs;
}

CliqueStructure chordal_extension(const Grid &grid) {
    CliqueStructure cs = chordal_extension(grid.n(), grid_edges(grid), grid.kind == GridKind::AC);
    cs.grid_id = grid.id;
    return cs;
}

CliqueStructure merge_cliques(const CliqueStructure &in, double threshold) {
    CliqueStructure cs = in;
    if (!(threshold > 0.0)) return cs;
    const double lift = cs.lifted_ac ? 2.0 : 1.0;
    for (;;) {
        int best = -1;
        double best_ratio = 0.0;
        for (size_t l = 0; l < cs.links.size(); ++l) {
            const auto &a = cs.cliques[cs.links[l].parent], &b = cs.cliques[cs.links[l].child];
            const double u = static_cast<double>(unite(a, b).size());
            const double cost = u * u - double(a.size() * a.size()) - double(b.size() * b.size());
            const double s = static_cast<double>(cs.links[l].shared.size());
            const double elim = lift * s * (s + 1.0) / 2.0;
            if (!(cost <= threshold * elim)) continue;
            const double ratio = cost / elim;
            if (best < 0 || ratio < best_ratio) {
                best = static_cast<int>(l);
                best_ratio = ratio;
            }
        }
        if (best < 0) break;
        const int p = cs.links[best].parent, c = cs.links[best].child;
        cs.cliques[p] = unite(cs.cliques[p], cs.cliques[c]);
        cs.cliques.erase(cs.cliques.begin() + c);
        // drop cliques swallowed by the union
        for (size_t j = 0; j < cs.cliques.size();) {
            bool swallowed = false;
            for (size_t k = 0; k < cs.cliques.size(); ++k)
                if (k != j && subset(cs.cliques[j], cs.cliques[k]) && cs.cliques[j].size() < cs.cliques[k].size())
                    swallowed = true;
            if (swallowed)
                cs.cliques.erase(cs.cliques.begin() + j);
            else
                ++j;
        }
        std::sort(cs.cliques.begin(), cs.cliques.end());
        build_clique_tree(cs);
    }
    recompute_fill(cs);
    return cs;
}

bool is_chordal(int n, const std::vector<Edge> &edges) {
    AdjSets adj = adjacency(n, normalized(edges));
    // maximum cardinality search gives a reverse perfect elimination order iff chordal
    std::vector<int> weight(n, 0), order;
    std::vector<bool> done(n, false);
    for (int step = 0; step < n; ++step) {
        int v = -1;
        for (int u = 0; u < n; ++u)
            if (!done[u] && (v < 0 || weight[u] > weight[v])) v = u;
        done[v] = true;
        order.push_back(v);
        for (int w : adj[v])
            if (!done[w]) ++weight[w];
    }
    std::vector<int> pos(n);
    for (int i = 0; i < n; ++i) pos[order[i]] = i;
    // for each v, its earlier-visited neighbours must form a clique
    for (int v = 0; v < n; ++v) {
        std::vector<int> earlier;
        for (int w : adj[v])
            if (pos[w] < pos[v]) earlier.push_back(w);
        if (earlier.empty()) continue;
        int last = *std::max_element(earlier.begin(), earlier.end(), [&](int a, int b) { return pos[a] < pos[b]; });
        for (int w : earlier)
            if (w != last && !adj[last].count(w)) return false;
    }
    return true;
}

long overlap_equality_count(const CliqueStructure &cs) {
    long total = 0;
    for (const OverlapLink &l : cs.links) {
        const long s = static_cast<long>(l.shared.size());
        total += s * (s + 1) / 2 * (cs.lifted_ac ? 2 : 1);
    }
    return total;
}

std::vector<int> lifted_indices(const CliqueStructure &cs, int clique) {
    std::vector<int> idx = cs.cliques.at(clique);
    const size_t c = idx.size();
    for (size_t i = 0; i < c; ++i) idx.push_back(cs.n + idx[i]);
    return idx;
}

namespace {

Eigen::MatrixXd pinv_sym(const Eigen::MatrixXd &A) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    const Eigen::VectorXd &d = es.eigenvalues();
    const double cut = 1e-10 * std::max(1.0, d.cwiseAbs().maxCoeff());
    Eigen::VectorXd inv = d.unaryExpr([&](double x) { return std::abs(x) > cut ? 1.0 / x : 0.0; });
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

} // namespace

Eigen::MatrixXd complete_psd(const CliqueStructure &cs, const std::vector<Eigen::MatrixXd> &blocks, double overlap_tol) {
    const int N = 2 * cs.n;
    if (blocks.size() != cs.cliques.size()) throw InputError("complete_psd: one block per clique required");
    for (size_t c = 0; c < blocks.size(); ++c) {
        const int d = 2 * static_cast<int>(cs.cliques[c].size());
        if (blocks[c].rows() != d || blocks[c].cols() != d) throw InputError("complete_psd: block size mismatch");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (blocks[c] + blocks[c].transpose()), Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-9)
            throw NumericError("complete_psd: clique block " + std::to_string(c) + " is not PSD");
    }
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(N, N);
    std::vector<bool> filled(N, false);
    for (int c : cs.topological()) {
        std::vector<int> idx = lifted_indices(cs, c);
        std::vector<int> S_loc, R_loc; // positions within the clique block
        for (size_t a = 0; a < idx.size(); ++a) (filled[idx[a]] ? S_loc : R_loc).push_back(static_cast<int>(a));
        const Eigen::MatrixXd &B = blocks[c];
        // overlap agreement
        for (int a : S_loc)
            for (int b : S_loc)
                if (std::abs(W(idx[a], idx[b]) - B(a, b)) > overlap_tol)
                    throw NumericError("complete_psd: overlap disagreement at clique " + std::to_string(c));
        std::vector<int> U;
        for (int i = 0; i < N; ++i)
            if (filled[i]) U.push_back(i);
        std::vector<int> S_glob, U_rest;
        for (int a : S_loc) S_glob.push_back(idx[a]);
        for (int u : U)
            if (std::find(S_glob.begin(), S_glob.end(), u) == S_glob.end()) U_rest.push_back(u);
        // block entries
        for (size_t a = 0; a < idx.size(); ++a)
            for (size_t b = 0; b < idx.size(); ++b) W(idx[a], idx[b]) = B(a, b);
        if (!R_loc.empty() && !U_rest.empty()) {
            const int s = static_cast<int>(S_glob.size());
            Eigen::MatrixXd WRS(R_loc.size(), s), WSS(s, s), WSU(s, U_rest.size());
            for (size_t a = 0; a < R_loc.size(); ++a)
                for (int b = 0; b < s; ++b) WRS(a, b) = B(R_loc[a], S_loc[b]);
            for (int a = 0; a < s; ++a)
                for (int b = 0; b < s; ++b) WSS(a, b) = B(S_loc[a], S_loc[b]);
            for (int a = 0; a < s; ++a)
                for (size_t b = 0; b < U_rest.size(); ++b) WSU(a, b) = W(S_glob[a], U_rest[b]);
            Eigen::MatrixXd WRU = s > 0 ? Eigen::MatrixXd(WRS * pinv_sym(WSS) * WSU)
                                        : Eigen::MatrixXd::Zero(R_loc.size(), U_rest.size());
            for (size_t a = 0; a < R_loc.size(); ++a)
                for (size_t b = 0; b < U_rest.size(); ++b) {
                    W(idx[R_loc[a]], U_rest[b]) = WRU(a, b);
                    W(U_rest[b], idx[R_loc[a]]) = WRU(a, b);
                }
        }
        for (int i : idx) filled[i] = true;
    }
    return W;
}

} // namespace ccopf

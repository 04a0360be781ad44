#ifndef CCOPF_CHORDAL_HPP
#define CCOPF_CHORDAL_HPP

#include "ccopf/grid_model.hpp"

#include <Eigen/Dense>

#include <limits>
#include <utility>
#include <vector>

namespace ccopf {

using Edge = std::pair<int, int>;

struct OverlapLink {
    int parent = 0;
    int child = 0;
    std::vector<int> shared; // sorted vertex indices in both cliques
};

struct CliqueStructure {
    int grid_id = 0;
    int n = 0;
    bool lifted_ac = true; // AC grids carry Re/Im parts, DC grids only Re
    std::vector<int> order; // elimination order, vertex indices (0-based)
    std::vector<Edge> edges; // original graph edges (i < j), sorted
    std::vector<Edge> fill_edges;
    std::vector<std::vector<int>> cliques; // each sorted
    std::vector<int> parent;              // clique tree, -1 for the root
    std::vector<OverlapLink> links;       // one per tree edge, in child order

    // clique indices in root-first (parents before children) order
    std::vector<int> topological() const;
    // index of the first clique containing both vertices, or -1
    int owner(int i, int j) const;
};

std::vector<Edge> grid_edges(const Grid &g);

CliqueStructure chordal_extension(int n, const std::vector<Edge> &edges, bool lifted_ac = true);
CliqueStructure chordal_extension(const Grid &grid);

CliqueStructure merge_cliques(const CliqueStructure &cs, double threshold);

// Perfect-elimination-ordering test (maximum cardinality search).
bool is_chordal(int n, const std::vector<Edge> &edges);

// Scalar equalities needed to tie the clique copies together: sum over links of
// s(s+1)/2, doubled for AC grids.
long overlap_equality_count(const CliqueStructure &cs);

// Lifted index set of a clique: its vertices followed by n + its vertices.
std::vector<int> lifted_indices(const CliqueStructure &cs, int clique);

// Maximum-determinant PSD completion of clique blocks given on the lifted
// index sets. Returns the full 2n x 2n matrix.
Eigen::MatrixXd complete_psd(const CliqueStructure &cs, const std::vector<Eigen::MatrixXd> &blocks,
                             double overlap_tol = 1e-7);

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

} // namespace ccopf

#endif

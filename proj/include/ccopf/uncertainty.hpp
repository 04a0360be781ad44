#ifndef CCOPF_UNCERTAINTY_HPP
#define CCOPF_UNCERTAINTY_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace ccopf {

struct UncertaintyModel {
    int n_w = 0;
    double epsilon = 0.05;
    double beta = 1e-3;
    Eigen::MatrixXd samples; // N_s x n_W
    Eigen::VectorXd lower, upper;
    std::vector<Eigen::VectorXd> vertices; // 2^n_W, canonical binary order
    bool degenerate = false;

    int n_vertices() const { return static_cast<int>(vertices.size()); }
};

long required_sample_count(double epsilon, double beta, int n_delta);

// Throws if the sample count is below the requirement unless check_count is false.
UncertaintyModel build_rect_set(const Eigen::MatrixXd &samples, double epsilon, double beta, bool check_count = true);

// Box with given bounds and no samples (used for zero-width and hand-built studies).
UncertaintyModel box_model(const Eigen::VectorXd &lower, const Eigen::VectorXd &upper);

struct Interpolation {
    Eigen::VectorXd psi; // one weight per vertex
    Eigen::VectorXd zeta; // realisation after clamping
    bool clamped = false;
};

// Facet: the ray from the forecast through zeta hits one box facet; the weight
// s = max_w t_w is split over that facet's vertices by multilinear
// interpolation, so sum_v psi_v zeta_v = zeta (piecewise affine for n_w <= 2).
// OrthantProduct: a single sign-matched vertex with weight prod_w t_w.
enum class PsiScheme { Facet, OrthantProduct };

Interpolation interpolation_weights(const UncertaintyModel &m, const Eigen::VectorXd &zeta,
                                    PsiScheme scheme = PsiScheme::Facet);
const char *to_string(PsiScheme s);
PsiScheme parse_psi_scheme(const std::string &s); // "facet" | "product"

UncertaintyModel discard_worst_case(const UncertaintyModel &m, double beta_star);

Eigen::MatrixXd read_samples_csv(const std::string &path);
void write_samples_csv(const std::string &path, const Eigen::MatrixXd &samples);

// Correlated forecast errors: Gaussian copula over Beta marginals on [0, rated],
// mean at the forecast, standard deviation sigma[w] (p.u.).
struct CopulaSpec {
    std::vector<double> forecast, rated, sigma;
    Eigen::MatrixXd correlation;
};
Eigen::MatrixXd generate_copula_samples(const CopulaSpec &spec, int count, std::uint64_t seed);

} // namespace ccopf

#endif

#include "ccopf/uncertainty.hpp"
#include "ccopf/errors.hpp"

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace ccopf {

long required_sample_count(double epsilon, double beta, int n_delta) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw InputError("epsilon must lie in (0,1)");
    if (!(beta > 0.0 && beta <= 1.0)) throw InputError("beta must lie in (0,1]");
    if (n_delta < 1) throw InputError("n_delta must be at least 1");
    const double e = std::exp(1.0);
    const double v = (1.0 / epsilon) * (e / (e - 1.0)) * (std::log(1.0 / beta) + 2.0 * n_delta - 1.0);
    return static_cast<long>(std::ceil(v - 1e-9));
}

namespace {

constexpr double kHuge = std::numeric_limits<double>::max();

void fill_vertices(UncertaintyModel &m) {
    m.vertices.clear();
    const int nv = 1 << m.n_w;
    for (int v = 0; v < nv; ++v) {
        Eigen::VectorXd z(m.n_w);
        for (int w = 0; w < m.n_w; ++w) z(w) = ((v >> w) & 1) ? m.upper(w) : m.lower(w);
        m.vertices.push_back(z);
    }
    m.degenerate = (m.upper - m.lower).cwiseAbs().maxCoeff() == 0.0;
}

void recompute_bounds(UncertaintyModel &m) {
    m.lower = m.samples.colwise().minCoeff().transpose();
    m.upper = m.samples.colwise().maxCoeff().transpose();
    fill_vertices(m);
}

} // namespace

UncertaintyModel build_rect_set(const Eigen::MatrixXd &samples, double epsilon, double beta, bool check_count) {
    if (samples.rows() == 0 || samples.cols() == 0) throw InputError("empty sample set");
    UncertaintyModel m;
    m.n_w = static_cast<int>(samples.cols());
    m.epsilon = epsilon;
    m.beta = beta;
    if (check_count) {
        long need = required_sample_count(epsilon, beta, m.n_w);
        if (samples.rows() < need)
            throw InputError("too few samples: " + std::to_string(samples.rows()) + " < " + std::to_string(need));
    }
    m.samples = samples;
    recompute_bounds(m);
    for (Eigen::Index r = 0; r < samples.rows(); ++r)
        for (int w = 0; w < m.n_w; ++w)
            if (samples(r, w) < m.lower(w) || samples(r, w) > m.upper(w))
                throw NumericError("sample outside its own box");
    return m;
}

UncertaintyModel box_model(const Eigen::VectorXd &lower, const Eigen::VectorXd &upper) {
    UncertaintyModel m;
    m.n_w = static_cast<int>(lower.size());
    m.lower = lower;
    m.upper = upper;
    m.samples = Eigen::MatrixXd(0, m.n_w);
    fill_vertices(m);
    return m;
}

namespace {

void facet_weights(const UncertaintyModel &m, Interpolation &out) {
    double s = 0.0;
    int face = -1;
    for (int w = 0; w < m.n_w; ++w) {
        const double z = out.zeta(w);
        double t = 0.0;
        if (z > 0.0) {
            if (m.upper(w) <= 0.0) throw InputError("zero-width dimension with nonzero realisation");
            t = z / m.upper(w);
        } else if (z < 0.0) {
            if (m.lower(w) >= 0.0) throw InputError("zero-width dimension with nonzero realisation");
            t = z / m.lower(w);
        }
        if (t > s) {
            s = t;
            face = w;
        }
    }
    if (face < 0) return;
    const int side = out.zeta(face) > 0.0 ? 1 : 0;
    for (int v = 0; v < m.n_vertices(); ++v) {
        if (((v >> face) & 1) != side) continue;
        double wgt = s;
        for (int j = 0; j < m.n_w && wgt > 0.0; ++j) {
            if (j == face) continue;
            const double width = m.upper(j) - m.lower(j);
            const double u = width > 0.0 ? std::clamp((out.zeta(j) / s - m.lower(j)) / width, 0.0, 1.0) : 0.5;
            wgt *= ((v >> j) & 1) ? u : 1.0 - u;
        }
        out.psi(v) = wgt;
    }
}

} // namespace

const char *to_string(PsiScheme s) { return s == PsiScheme::Facet ? "facet" : "product"; }

PsiScheme parse_psi_scheme(const std::string &s) {
    if (s == "facet") return PsiScheme::Facet;
    if (s == "product") return PsiScheme::OrthantProduct;
    throw InputError("unknown interpolation scheme '" + s + "'");
}

Interpolation interpolation_weights(const UncertaintyModel &m, const Eigen::VectorXd &zeta, PsiScheme scheme) {
    if (zeta.size() != m.n_w) throw InputError("realisation has wrong dimension");
    Interpolation out;
    out.zeta = zeta;
    for (int w = 0; w < m.n_w; ++w) {
        double z = std::clamp(zeta(w), std::min(m.lower(w), 0.0), std::max(m.upper(w), 0.0));
        if (z != zeta(w)) out.clamped = true;
        out.zeta(w) = z;
    }
    out.psi = Eigen::VectorXd::Zero(m.n_vertices());
    if (scheme == PsiScheme::Facet) {
        facet_weights(m, out);
        return out;
    }
    double weight = 1.0;
    int vertex = 0;
    for (int w = 0; w < m.n_w; ++w) {
        const double z = out.zeta(w);
        if (z >= 0.0) {
            vertex |= 1 << w;
            if (z == 0.0) {
                weight = 0.0;
                continue;
            }
            if (m.upper(w) <= 0.0) throw InputError("zero-width dimension with nonzero realisation");
            weight *= z / m.upper(w);
        } else {
            if (m.lower(w) >= 0.0) throw InputError("zero-width dimension with nonzero realisation");
            weight *= z / m.lower(w);
        }
    }
    out.psi(vertex) = weight;
    return out;
}

UncertaintyModel discard_worst_case(const UncertaintyModel &m, double beta_star) {
    if (beta_star < m.beta) throw InputError("beta* would require more samples than available");
    const long remove = required_sample_count(m.epsilon, m.beta, m.n_w) -
                        required_sample_count(m.epsilon, beta_star, m.n_w);
    if (remove <= 0) return m;
    if (remove >= m.samples.rows()) throw InputError("beta* would require more samples than available");

    std::vector<int> alive(m.samples.rows());
    for (size_t i = 0; i < alive.size(); ++i) alive[i] = static_cast<int>(i);
    auto bounds = [&](const std::vector<int> &rows, int skip, Eigen::VectorXd &lo, Eigen::VectorXd &hi) {
        lo = Eigen::VectorXd::Constant(m.n_w, kHuge);
        hi = Eigen::VectorXd::Constant(m.n_w, -kHuge);
        for (int r : rows) {
            if (r == skip) continue;
            for (int w = 0; w < m.n_w; ++w) {
                lo(w) = std::min(lo(w), m.samples(r, w));
                hi(w) = std::max(hi(w), m.samples(r, w));
            }
        }
    };
    for (long step = 0; step < remove; ++step) {
        Eigen::VectorXd lo, hi;
        bounds(alive, -1, lo, hi);
        int best = -1;
        double best_score = -1.0;
        for (int r : alive) {
            bool on_boundary = false;
            for (int w = 0; w < m.n_w; ++w)
                if (m.samples(r, w) == lo(w) || m.samples(r, w) == hi(w)) on_boundary = true;
            if (!on_boundary) continue;
            Eigen::VectorXd l2, h2;
            bounds(alive, r, l2, h2);
            double score = 0.0;
            for (int w = 0; w < m.n_w; ++w) {
                const double width = hi(w) - lo(w);
                if (width > 0.0) score = std::max(score, (width - (h2(w) - l2(w))) / width);
            }
            if (score > best_score) {
                best_score = score;
                best = r;
            }
        }
        alive.erase(std::find(alive.begin(), alive.end(), best));
    }
    UncertaintyModel out = m;
    out.samples.resize(static_cast<Eigen::Index>(alive.size()), m.n_w);
    for (size_t i = 0; i < alive.size(); ++i) out.samples.row(static_cast<Eigen::Index>(i)) = m.samples.row(alive[i]);
    out.beta = beta_star;
    recompute_bounds(out);
    return out;
}

Eigen::MatrixXd read_samples_csv(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw InputError("samples not found: " + path);
    std::string line;
    if (!std::getline(in, line)) throw InputError("empty samples file: " + path);
    int cols = 0;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
            if (cell != "zeta_" + std::to_string(cols + 1))
                throw InputError("samples header must read zeta_1,...,zeta_n");
            ++cols;
        }
    }
    std::vector<double> data;
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        std::stringstream ss(line);
        std::string cell;
        int c = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                size_t used = 0;
                data.push_back(std::stod(cell, &used));
            } catch (const std::exception &) {
                throw InputError("bad number in samples row " + std::to_string(rows + 1));
            }
            ++c;
        }
        if (c != cols) throw InputError("samples row " + std::to_string(rows + 1) + " has wrong column count");
        ++rows;
    }
    Eigen::MatrixXd S(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) S(r, c) = data[static_cast<size_t>(r) * cols + c];
    return S;
}

void write_samples_csv(const std::string &path, const Eigen::MatrixXd &samples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    for (Eigen::Index c = 0; c < samples.cols(); ++c) out << (c ? "," : "") << "zeta_" << c + 1;
    out << "\n";
    char buf[64];
    for (Eigen::Index r = 0; r < samples.rows(); ++r) {
        for (Eigen::Index c = 0; c < samples.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", samples(r, c));
            out << (c ? "," : "") << buf;
        }
        out << "\n";
    }
}

Eigen::MatrixXd generate_copula_samples(const CopulaSpec &spec, int count, std::uint64_t seed) {
    const int n = static_cast<int>(spec.forecast.size());
    if (spec.rated.size() != spec.forecast.size() || spec.sigma.size() != spec.forecast.size() ||
        spec.correlation.rows() != n || spec.correlation.cols() != n)
        throw InputError("copula spec dimensions disagree");
    Eigen::LLT<Eigen::MatrixXd> llt(spec.correlation);
    if (llt.info() != Eigen::Success) throw InputError("copula correlation is not positive definite");
    Eigen::MatrixXd L = llt.matrixL();

    std::vector<boost::math::beta_distribution<double>> marg;
    for (int w = 0; w < n; ++w) {
        const double mean = spec.forecast[w] / spec.rated[w];
        const double var = std::pow(spec.sigma[w] / spec.rated[w], 2);
        if (!(mean > 0.0 && mean < 1.0) || !(var > 0.0 && var < mean * (1.0 - mean)))
            throw InputError("copula marginal " + std::to_string(w + 1) + " is infeasible");
        const double k = mean * (1.0 - mean) / var - 1.0;
        marg.emplace_back(mean * k, (1.0 - mean) * k);
    }
    boost::math::normal_distribution<double> stdnorm;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd S(count, n);
    Eigen::VectorXd z(n);
    for (int r = 0; r < count; ++r) {
        for (int w = 0; w < n; ++w) z(w) = gauss(rng);
        Eigen::VectorXd c = L * z;
        for (int w = 0; w < n; ++w) {
            double u = boost::math::cdf(stdnorm, c(w));
            u = std::clamp(u, 1e-12, 1.0 - 1e-12);
            S(r, w) = spec.rated[w] * boost::math::quantile(marg[w], u) - spec.forecast[w];
        }
    }
    return S;
}

} // namespace ccopf

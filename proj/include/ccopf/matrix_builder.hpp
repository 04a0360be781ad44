#ifndef CCOPF_MATRIX_BUILDER_HPP
#define CCOPF_MATRIX_BUILDER_HPP

#include "ccopf/grid_model.hpp"

#include <Eigen/Dense>

#include <vector>

namespace ccopf {

// Real symmetric sparse matrix, stored as its upper triangle in (row, col) order.
class SparseSym {
public:
    struct Entry {
        int row, col;
        double value;
    };

    SparseSym() = default;
    explicit SparseSym(int dim) : dim_(dim) {}

    int dim() const { return dim_; }
    const std::vector<Entry> &entries() const { return entries_; }

    // Adds v at (r,c) and, implicitly, (c,r). Call finalize() before reading.
    void add(int r, int c, double v);
    void finalize(double drop_below = 0.0);

    double at(int r, int c) const;
    Eigen::MatrixXd dense() const;
    // Tr(S * W) for symmetric W
    double trace_with(const Eigen::MatrixXd &W) const;
    double quad(const Eigen::VectorXd &x) const; // x' S x

private:
    int dim_ = 0;
    std::vector<Entry> entries_;
};

Eigen::MatrixXcd build_bus_admittance(const Grid &grid);

// 2n x 2n lifts of an n x n complex matrix A:
// bold_y(A) gives Re(.) of the bilinear form, bold_ybar(A) the Im part.
SparseSym bold_y(const Eigen::MatrixXcd &A);
SparseSym bold_ybar(const Eigen::MatrixXcd &A);

struct AuxiliaryMatrices {
    int n = 0;
    Eigen::MatrixXcd Y;
    std::vector<SparseSym> Yk, Ybark, Mk; // per bus index
    // per branch, from-end (l,m) and to-end (m,l) flows plus |V_l - V_m|^2
    std::vector<SparseSym> Ylm, Ybarlm, Yml, Ybarml, Mlm;
};

AuxiliaryMatrices build_aux_matrices(const Grid &grid);

// M_kf for a converter: |V_k - V_f|^2 lifted, on the converter's AC grid.
SparseSym converter_mkf(const NetworkCase &c, int converter);

// x = [Re V; Im V]
Eigen::VectorXd lift_voltage(const Eigen::VectorXcd &V);

} // namespace ccopf

#endif

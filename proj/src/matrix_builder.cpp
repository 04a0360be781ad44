#include "ccopf/matrix_builder.hpp"

#include <algorithm>
#include <cmath>

namespace ccopf {

void SparseSym::add(int r, int c, double v) {
    if (r > c) std::swap(r, c);
    entries_.push_back({r, c, v});
}

void SparseSym::finalize(double drop_below) {
    std::sort(entries_.begin(), entries_.end(), [](const Entry &a, const Entry &b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    std::vector<Entry> merged;
    for (const Entry &e : entries_) {
        if (!merged.empty() && merged.back().row == e.row && merged.back().col == e.col)
            merged.back().value += e.value;
        else
            merged.push_back(e);
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(),
                                [&](const Entry &e) { return std::abs(e.value) <= drop_below; }),
                 merged.end());
    entries_.swap(merged);
}

double SparseSym::at(int r, int c) const {
    if (r > c) std::swap(r, c);
    auto it = std::lower_bound(entries_.begin(), entries_.end(), Entry{r, c, 0.0}, [](const Entry &a, const Entry &b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    if (it != entries_.end() && it->row == r && it->col == c) return it->value;
    return 0.0;
}

Eigen::MatrixXd SparseSym::dense() const {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(dim_, dim_);
    for (const Entry &e : entries_) {
        D(e.row, e.col) = e.value;
        D(e.col, e.row) = e.value;
    }
    return D;
}

double SparseSym::trace_with(const Eigen::MatrixXd &W) const {
    double s = 0.0;
    for (const Entry &e : entries_) s += (e.row == e.col ? 1.0 : 2.0) * e.value * W(e.row, e.col);
    return s;
}

double SparseSym::quad(const Eigen::VectorXd &x) const {
    double s = 0.0;
    for (const Entry &e : entries_) s += (e.row == e.col ? 1.0 : 2.0) * e.value * x(e.row) * x(e.col);
    return s;
}

Eigen::MatrixXcd build_bus_admittance(const Grid &grid) {
    const int n = grid.n();
    Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
    for (const Branch &br : grid.branches) {
        const int l = br.from - 1, m = br.to - 1;
        const cplx y = br.y(), ys = br.y_sh();
        Y(l, l) += y + ys;
        Y(m, m) += y + ys;
        Y(l, m) -= y;
        Y(m, l) -= y;
    }
    for (int k = 0; k < n; ++k) Y(k, k) += cplx(grid.buses[k].g_shunt, grid.buses[k].b_shunt);
    return Y;
}

SparseSym bold_y(const Eigen::MatrixXcd &A) {
    const int n = static_cast<int>(A.rows());
    SparseSym S(2 * n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const cplx s = A(i, j) + A(j, i), d = A(i, j) - A(j, i);
            if (s == cplx(0.0, 0.0) && d == cplx(0.0, 0.0)) continue;
            S.add(i, j, 0.5 * s.real());
            S.add(n + i, n + j, 0.5 * s.real());
            S.add(i, n + j, -0.5 * d.imag());
            if (i != j) S.add(j, n + i, 0.5 * d.imag());
        }
    S.finalize();
    return S;
}

SparseSym bold_ybar(const Eigen::MatrixXcd &A) {
    const int n = static_cast<int>(A.rows());
    SparseSym S(2 * n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const cplx s = A(i, j) + A(j, i), d = A(i, j) - A(j, i);
            if (s == cplx(0.0, 0.0) && d == cplx(0.0, 0.0)) continue;
            S.add(i, j, -0.5 * s.imag());
            S.add(n + i, n + j, -0.5 * s.imag());
            S.add(i, n + j, -0.5 * d.real());
            if (i != j) S.add(j, n + i, 0.5 * d.real());
        }
    S.finalize();
    return S;
}

namespace {

SparseSym diff_square(int n, int l, int m) {
    SparseSym S(2 * n);
    for (int h = 0; h < 2; ++h) {
        const int o = h * n;
        S.add(o + l, o + l, 1.0);
        S.add(o + m, o + m, 1.0);
        S.add(o + l, o + m, -1.0);
    }
    S.finalize();
    return S;
}

} // namespace

AuxiliaryMatrices build_aux_matrices(const Grid &grid) {
    AuxiliaryMatrices aux;
    const int n = grid.n();
    aux.n = n;
    aux.Y = build_bus_admittance(grid);
    for (int k = 0; k < n; ++k) {
        Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(n, n);
        A.row(k) = aux.Y.row(k);
        aux.Yk.push_back(bold_y(A));
        aux.Ybark.push_back(bold_ybar(A));
        SparseSym M(2 * n);
        M.add(k, k, 1.0);
        M.add(n + k, n + k, 1.0);
        M.finalize();
        aux.Mk.push_back(M);
    }
    for (const Branch &br : grid.branches) {
        const int l = br.from - 1, m = br.to - 1;
        const cplx y = br.y(), ys = br.y_sh();
        Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(n, n);
        A(l, l) = ys + y;
        A(l, m) = -y;
        aux.Ylm.push_back(bold_y(A));
        aux.Ybarlm.push_back(bold_ybar(A));
        Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(n, n);
        B(m, m) = ys + y;
        B(m, l) = -y;
        aux.Yml.push_back(bold_y(B));
        aux.Ybarml.push_back(bold_ybar(B));
        aux.Mlm.push_back(diff_square(n, l, m));
    }
    return aux;
}

SparseSym converter_mkf(const NetworkCase &c, int converter) {
    const Converter &cv = c.converters.at(converter);
    const Grid &g = c.grid(cv.ac_grid);
    return diff_square(g.n(), cv.ac_bus - 1, cv.filter_bus - 1);
}

Eigen::VectorXd lift_voltage(const Eigen::VectorXcd &V) {
    const int n = static_cast<int>(V.size());
    Eigen::VectorXd x(2 * n);
    x.head(n) = V.real();
    x.tail(n) = V.imag();
    return x;
}

} // namespace ccopf

#include "ccopf/conic.hpp"
#include "ccopf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace ccopf {

AffineExpr &AffineExpr::operator+=(const AffineExpr &o) {
    constant += o.constant;
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    return *this;
}

AffineExpr &AffineExpr::operator-=(const AffineExpr &o) {
    constant -= o.constant;
    for (auto [v, c] : o.terms) terms.push_back({v, -c});
    return *this;
}

AffineExpr &AffineExpr::operator*=(double s) {
    constant *= s;
    for (auto &t : terms) t.second *= s;
    return *this;
}

void AffineExpr::compress() {
    std::sort(terms.begin(), terms.end(), [](const auto &a, const auto &b) { return a.first < b.first; });
    std::vector<std::pair<int, double>> out;
    for (const auto &t : terms) {
        if (!out.empty() && out.back().first == t.first)
            out.back().second += t.second;
        else
            out.push_back(t);
    }
    out.erase(std::remove_if(out.begin(), out.end(), [](const auto &t) { return t.second == 0.0; }), out.end());
    terms.swap(out);
}

double AffineExpr::eval(const Eigen::VectorXd &x) const {
    double s = constant;
    for (auto [v, c] : terms) s += c * x(v);
    return s;
}

AffineExpr operator+(AffineExpr a, const AffineExpr &b) { return a += b; }
AffineExpr operator-(AffineExpr a, const AffineExpr &b) { return a -= b; }
AffineExpr operator*(double s, AffineExpr a) { return a *= s; }

AffineExpr &ConstraintSet::Lmi::at(int i, int j) {
    if (i > j) std::swap(i, j);
    return entries[static_cast<size_t>(i) * dim + j];
}

const AffineExpr &ConstraintSet::Lmi::at(int i, int j) const {
    if (i > j) std::swap(i, j);
    return entries[static_cast<size_t>(i) * dim + j];
}

void ConstraintSet::claim(const std::string &id) {
    if (!ids_.insert(id).second) throw InputError("duplicate constraint id: " + id);
}

int ConstraintSet::add_variable(const std::string &label) {
    labels_.push_back(label);
    return static_cast<int>(labels_.size()) - 1;
}

void ConstraintSet::add_inequality(const std::string &id, AffineExpr e) {
    claim(id);
    e.compress();
    ineq_.push_back({id, std::move(e)});
}

void ConstraintSet::add_equality(const std::string &id, AffineExpr e) {
    claim(id);
    e.compress();
    eq_.push_back({id, std::move(e)});
}

void ConstraintSet::add_range(const std::string &id, const AffineExpr &e, double lo, double hi) {
    if (lo > hi) throw InputError("empty range for " + id);
    if (lo == hi) {
        add_equality(id, e - AffineExpr(lo));
        return;
    }
    if (std::isfinite(lo)) add_inequality(id + "/lo", e - AffineExpr(lo));
    if (std::isfinite(hi)) add_inequality(id + "/hi", AffineExpr(hi) - e);
}

ConstraintSet::Lmi &ConstraintSet::add_lmi(const std::string &id, int dim) {
    if (dim < 1) throw InputError("LMI dimension mismatch: " + id);
    claim(id);
    Lmi l;
    l.id = id;
    l.dim = dim;
    l.entries.resize(static_cast<size_t>(dim) * dim);
    lmis_.push_back(std::move(l));
    return lmis_.back();
}

int ConicProblem::add_row(double rhs, const std::string &label) {
    b.conservativeResize(m + 1);
    b(m) = rhs;
    row_labels.push_back(label);
    return m++;
}

int ConicProblem::add_psd_block(int dim, const std::string &label) {
    PsdBlock blk;
    blk.dim = dim;
    blk.label = label;
    psd.push_back(std::move(blk));
    return static_cast<int>(psd.size()) - 1;
}

int ConicProblem::add_nonneg(double c, const std::string &label) {
    nonneg.c.push_back(c);
    nonneg.labels.push_back(label);
    nonneg.cols.emplace_back();
    return nonneg.dim++;
}

int ConicProblem::add_free(double c, const std::string &label) {
    free.c.push_back(c);
    free.labels.push_back(label);
    free.cols.emplace_back();
    return free.dim++;
}

void ConicProblem::set_c(int block, int i, int j, double v) {
    if (i > j) std::swap(i, j);
    psd.at(block).C.push_back({i, j, v});
}

void ConicProblem::add_a(int row, int block, int i, int j, double v) {
    if (i > j) std::swap(i, j);
    if (row < 0 || row >= m) throw InputError("dimension mismatch: row out of range");
    PsdBlock &blk = psd.at(block);
    if (j >= blk.dim || i < 0) throw InputError("dimension mismatch in block " + blk.label);
    blk.A.push_back({row, {i, j, v}});
}

void ConicProblem::add_nonneg_a(int row, int col, double v) {
    if (row < 0 || row >= m) throw InputError("dimension mismatch: row out of range");
    nonneg.cols.at(col).push_back({row, v});
}

void ConicProblem::add_free_a(int row, int col, double v) {
    if (row < 0 || row >= m) throw InputError("dimension mismatch: row out of range");
    free.cols.at(col).push_back({row, v});
}

namespace {

bool entry_less(const SymEntry &a, const SymEntry &b) { return a.i != b.i ? a.i < b.i : a.j < b.j; }

void merge_entries(std::vector<SymEntry> &e) {
    std::stable_sort(e.begin(), e.end(), entry_less);
    std::vector<SymEntry> out;
    for (const SymEntry &x : e) {
        if (!out.empty() && out.back().i == x.i && out.back().j == x.j)
            out.back().v += x.v;
        else
            out.push_back(x);
    }
    out.erase(std::remove_if(out.begin(), out.end(), [](const SymEntry &x) { return x.v == 0.0; }), out.end());
    e.swap(out);
}

void merge_col(std::vector<std::pair<int, double>> &c) {
    std::stable_sort(c.begin(), c.end(), [](const auto &a, const auto &b) { return a.first < b.first; });
    std::vector<std::pair<int, double>> out;
    for (const auto &x : c) {
        if (!out.empty() && out.back().first == x.first)
            out.back().second += x.second;
        else
            out.push_back(x);
    }
    out.erase(std::remove_if(out.begin(), out.end(), [](const auto &x) { return x.second == 0.0; }), out.end());
    c.swap(out);
}

} // namespace

void ConicProblem::canonicalize() {
    for (PsdBlock &blk : psd) {
        merge_entries(blk.C);
        std::stable_sort(blk.A.begin(), blk.A.end(), [](const auto &a, const auto &b) {
            return a.first != b.first ? a.first < b.first : entry_less(a.second, b.second);
        });
        std::vector<std::pair<int, SymEntry>> out;
        for (const auto &x : blk.A) {
            if (!out.empty() && out.back().first == x.first && out.back().second.i == x.second.i &&
                out.back().second.j == x.second.j)
                out.back().second.v += x.second.v;
            else
                out.push_back(x);
        }
        out.erase(std::remove_if(out.begin(), out.end(), [](const auto &x) { return x.second.v == 0.0; }), out.end());
        blk.A.swap(out);
    }
    for (auto &c : nonneg.cols) merge_col(c);
    for (auto &c : free.cols) merge_col(c);
}

ConicProblem assemble_standard_form(const ConstraintSet &cs) {
    if (cs.inequalities().empty() && cs.equalities().empty() && cs.lmis().empty())
        throw InputError("no constraints");
    ConicProblem p;
    p.dual_is_model = true;
    const int n = cs.n_variables();
    AffineExpr obj = cs.objective();
    obj.compress();
    p.objective_offset = obj.constant;
    Eigen::VectorXd cvec = Eigen::VectorXd::Zero(n);
    for (auto [v, c] : obj.terms) {
        if (v < 0 || v >= n) throw InputError("dimension mismatch: objective references unknown variable");
        cvec(v) += c;
    }
    for (int v = 0; v < n; ++v) p.add_row(-cvec(v), cs.variable_labels()[v]);

    auto check = [&](const AffineExpr &e, const std::string &id) {
        for (auto [v, c] : e.terms)
            if (v < 0 || v >= n) throw InputError("dimension mismatch: " + id + " references unknown variable");
    };
    for (const auto &l : cs.lmis()) {
        const int blk = p.add_psd_block(l.dim, l.id);
        if (static_cast<int>(l.entries.size()) != l.dim * l.dim) throw InputError("dimension mismatch: " + l.id);
        for (int i = 0; i < l.dim; ++i)
            for (int j = i; j < l.dim; ++j) {
                AffineExpr e = l.at(i, j);
                e.compress();
                check(e, l.id);
                if (e.constant != 0.0) p.set_c(blk, i, j, e.constant);
                for (auto [v, c] : e.terms) p.add_a(v, blk, i, j, -c);
            }
    }
    for (const auto &s : cs.inequalities()) {
        check(s.expr, s.id);
        const int col = p.add_nonneg(s.expr.constant, s.id);
        for (auto [v, c] : s.expr.terms) p.add_nonneg_a(v, col, -c);
    }
    for (const auto &s : cs.equalities()) {
        check(s.expr, s.id);
        const int col = p.add_free(s.expr.constant, s.id);
        for (auto [v, c] : s.expr.terms) p.add_free_a(v, col, -c);
    }
    p.canonicalize();
    return p;
}

const char *to_string(SolveStatus s) {
    switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
    case SolveStatus::IterLimit: return "IterLimit";
    case SolveStatus::NumErr: return "NumErr";
    }
    return "?";
}

double ConicSolution::model_objective(const ConicProblem &p) const {
    return p.dual_is_model ? p.objective_offset - dobj : p.objective_offset + pobj;
}

namespace {

void fmt(std::string &out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

} // namespace

std::string sdpa_text(const ConicProblem &in) {
    ConicProblem p = in;
    p.canonicalize();
    const int n_lp = p.nonneg.dim + 2 * p.free.dim;
    const int nblocks = static_cast<int>(p.psd.size()) + (n_lp > 0 ? 1 : 0);
    const int lp_block = static_cast<int>(p.psd.size()) + 1; // 1-based
    std::string out;
    out += std::to_string(p.m) + "\n";
    out += std::to_string(nblocks) + "\n";
    for (size_t j = 0; j < p.psd.size(); ++j) out += (j ? " " : "") + std::to_string(p.psd[j].dim);
    if (n_lp > 0) out += (p.psd.empty() ? "" : " ") + std::to_string(-n_lp);
    out += "\n";
    for (int r = 0; r < p.m; ++r) {
        if (r) out += " ";
        fmt(out, p.b(r));
    }
    out += "\n";

    struct Line {
        int mat, blk, i, j;
        double v;
    };
    std::vector<Line> lines;
    for (size_t j = 0; j < p.psd.size(); ++j) {
        for (const SymEntry &e : p.psd[j].C) lines.push_back({0, int(j) + 1, e.i + 1, e.j + 1, e.v});
        for (const auto &[row, e] : p.psd[j].A) lines.push_back({row + 1, int(j) + 1, e.i + 1, e.j + 1, e.v});
    }
    // LP block: nonnegative entries first, then each free entry as a +/- pair
    for (int k = 0; k < p.nonneg.dim; ++k) {
        if (p.nonneg.c[k] != 0.0) lines.push_back({0, lp_block, k + 1, k + 1, p.nonneg.c[k]});
        for (auto [row, v] : p.nonneg.cols[k]) lines.push_back({row + 1, lp_block, k + 1, k + 1, v});
    }
    for (int k = 0; k < p.free.dim; ++k) {
        const int plus = p.nonneg.dim + 2 * k + 1, minus = plus + 1;
        if (p.free.c[k] != 0.0) {
            lines.push_back({0, lp_block, plus, plus, p.free.c[k]});
            lines.push_back({0, lp_block, minus, minus, -p.free.c[k]});
        }
        for (auto [row, v] : p.free.cols[k]) {
            lines.push_back({row + 1, lp_block, plus, plus, v});
            lines.push_back({row + 1, lp_block, minus, minus, -v});
        }
    }
    std::stable_sort(lines.begin(), lines.end(), [](const Line &a, const Line &b) {
        if (a.mat != b.mat) return a.mat < b.mat;
        if (a.blk != b.blk) return a.blk < b.blk;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });
    for (const Line &l : lines) {
        out += std::to_string(l.mat) + " " + std::to_string(l.blk) + " " + std::to_string(l.i) + " " +
               std::to_string(l.j) + " ";
        fmt(out, l.v);
        out += "\n";
    }
    return out;
}

void export_sdpa(const ConicProblem &p, const std::string &path) {
    const std::string text = sdpa_text(p);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw InputError("cannot write " + path);
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw InputError("write failed: " + path);
}

} // namespace ccopf

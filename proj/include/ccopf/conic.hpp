#ifndef CCOPF_CONIC_HPP
#define CCOPF_CONIC_HPP

#include <Eigen/Dense>

#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace ccopf {

// constant + sum coef * var
struct AffineExpr {
    double constant = 0.0;
    std::vector<std::pair<int, double>> terms;

    AffineExpr() = default;
    AffineExpr(double c) : constant(c) {}
    static AffineExpr var(int v, double coef = 1.0) {
        AffineExpr e;
        e.terms.push_back({v, coef});
        return e;
    }

    AffineExpr &operator+=(const AffineExpr &o);
    AffineExpr &operator-=(const AffineExpr &o);
    AffineExpr &operator*=(double s);
    void add(int v, double coef) { terms.push_back({v, coef}); }
    // sorts terms, merges duplicates, drops exact zeros
    void compress();
    double eval(const Eigen::VectorXd &x) const;
};

AffineExpr operator+(AffineExpr a, const AffineExpr &b);
AffineExpr operator-(AffineExpr a, const AffineExpr &b);
AffineExpr operator*(double s, AffineExpr a);

// Optimisation model over free scalar variables: linear objective (minimised),
// scalar inequalities expr >= 0, equalities expr == 0 and LMIs.
class ConstraintSet {
public:
    struct Scalar {
        std::string id;
        AffineExpr expr;
    };
    struct Lmi {
        std::string id;
        int dim = 0;
        std::vector<AffineExpr> entries; // upper triangle, row major
        AffineExpr &at(int i, int j);
        const AffineExpr &at(int i, int j) const;
    };

    int add_variable(const std::string &label);
    int n_variables() const { return static_cast<int>(labels_.size()); }
    const std::vector<std::string> &variable_labels() const { return labels_; }

    void add_inequality(const std::string &id, AffineExpr e);
    void add_equality(const std::string &id, AffineExpr e);
    // lo <= e <= hi; lo == hi becomes one equality; infinite sides are skipped
    void add_range(const std::string &id, const AffineExpr &e, double lo, double hi);
    Lmi &add_lmi(const std::string &id, int dim);
    void add_objective(const AffineExpr &e) { objective_ += e; }

    const std::vector<Scalar> &inequalities() const { return ineq_; }
    const std::vector<Scalar> &equalities() const { return eq_; }
    const std::vector<Lmi> &lmis() const { return lmis_; }
    const AffineExpr &objective() const { return objective_; }

private:
    void claim(const std::string &id);
    std::vector<std::string> labels_;
    std::vector<Scalar> ineq_, eq_;
    std::vector<Lmi> lmis_;
    AffineExpr objective_;
    std::unordered_set<std::string> ids_;
};

struct SymEntry {
    int i, j; // i <= j, block-local
    double v;
};

// Primal standard form
//   min  sum_j <C_j, X_j> + c_l' x + c_u' u
//   s.t. sum_j <A_rj, X_j> + A_l x + A_u u = b_r   for every row r
//        X_j psd, x >= 0, u free
// and its dual  max b'y  s.t.  C_j - sum_r y_r A_rj psd,  c_l - A_l' y >= 0,  A_u' y = c_u.
struct ConicProblem {
    struct PsdBlock {
        int dim = 0;
        std::string label;
        std::vector<SymEntry> C;
        std::vector<std::pair<int, SymEntry>> A; // (row, entry), sorted by row then (i,j)
    };
    struct LinearBlock {
        int dim = 0;
        std::vector<std::string> labels;
        std::vector<double> c;
        std::vector<std::vector<std::pair<int, double>>> cols; // per column: (row, value)
    };

    int m = 0;
    Eigen::VectorXd b;
    std::vector<std::string> row_labels;
    std::vector<PsdBlock> psd;
    LinearBlock nonneg;
    LinearBlock free;
    double objective_offset = 0.0;
    // true when the optimisation model is the dual side (assembled from a ConstraintSet)
    bool dual_is_model = false;

    int add_row(double rhs, const std::string &label = "");
    int add_psd_block(int dim, const std::string &label);
    int add_nonneg(double c, const std::string &label = "");
    int add_free(double c, const std::string &label = "");
    // canonicalises to i <= j
    void set_c(int block, int i, int j, double v);
    void add_a(int row, int block, int i, int j, double v);
    void add_nonneg_a(int row, int col, double v);
    void add_free_a(int row, int col, double v);
    // sorts and merges coefficient lists; called by the solver and exporter
    void canonicalize();
};

ConicProblem assemble_standard_form(const ConstraintSet &cs);

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterLimit, NumErr };
const char *to_string(SolveStatus s);

struct SolverOptions {
    double tol_gap = 1e-8;
    double tol_feas = 1e-8;
    // accepted when progress stalls before the strict targets are met
    double accept_gap = 1e-7;
    double accept_feas = 1e-6;
    // last resort before reporting a numerical failure
    double reduced_gap = 1e-6;
    double reduced_feas = 1e-5;
    int max_iter = 200;
    double regularization = 1e-12;
    double infeas_ratio = 1e-8; // tau/kappa threshold for certificates
    bool keep_trace = false;
};

struct IterationRecord {
    double pobj, dobj, pres, dres, gap, mu, tau, kappa, residual_norm, step;
};

struct ConicSolution {
    SolveStatus status = SolveStatus::NumErr;
    std::vector<Eigen::MatrixXd> X, S; // primal blocks and dual slacks
    Eigen::VectorXd x_nonneg, s_nonneg;
    Eigen::VectorXd u_free;
    Eigen::VectorXd y;
    double pobj = 0.0, dobj = 0.0;
    double gap = 0.0, pres = 0.0, dres = 0.0;
    int iterations = 0;
    std::string message;
    std::vector<IterationRecord> trace;

    // objective of the model side (the ConstraintSet objective for assembled problems)
    double model_objective(const ConicProblem &p) const;
};

ConicSolution solve_sdp(const ConicProblem &p, const SolverOptions &opts = {});

// SDPA sparse format. F0 holds C, Fr holds A_r and the c line holds b.
std::string sdpa_text(const ConicProblem &p);
void export_sdpa(const ConicProblem &p, const std::string &path);

} // namespace ccopf

#endif

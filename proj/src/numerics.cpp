#include "crmdp/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "crmdp/errors.hpp"

namespace crmdp {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(const std::vector<numvec>& rows) {
    Matrix m;
    for (const auto& r : rows) m.append_row(r);
    return m;
}

void Matrix::append_row(std::span<const prec_t> values) {
    if (rows_ == 0 && data_.empty()) cols_ = values.size();
    if (values.size() != cols_)
        throw InvalidArgument("row length " + std::to_string(values.size()) +
                              " does not match column count " + std::to_string(cols_));
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
}

numvec Matrix::multiply(std::span<const prec_t> x) const {
    if (x.size() != cols_) throw InvalidArgument("matrix-vector dimension mismatch");
    numvec out(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = dot(row(i), x);
    return out;
}

numvec Matrix::multiply_transposed(std::span<const prec_t> y) const {
    if (y.size() != rows_) throw InvalidArgument("matrix-vector dimension mismatch");
    numvec out(cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) out[j] += (*this)(i, j) * y[i];
    return out;
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

prec_t dot(std::span<const prec_t> a, std::span<const prec_t> b) {
    if (a.size() != b.size()) throw InvalidArgument("dot: dimension mismatch");
    prec_t s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

prec_t norm_inf(std::span<const prec_t> a) {
    prec_t m = 0.0;
    for (prec_t x : a) m = std::max(m, std::abs(x));
    return m;
}

prec_t max_abs_diff(std::span<const prec_t> a, std::span<const prec_t> b) {
    if (a.size() != b.size()) throw InvalidArgument("max_abs_diff: dimension mismatch");
    prec_t m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

prec_t sum(std::span<const prec_t> a) { return std::accumulate(a.begin(), a.end(), 0.0); }

numvec interpolate(std::span<const prec_t> a, std::span<const prec_t> b, prec_t theta) {
    if (a.size() != b.size()) throw InvalidArgument("interpolate: dimension mismatch");
    numvec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = theta * a[i] + (1.0 - theta) * b[i];
    return out;
}

bool is_simplex_point(std::span<const prec_t> p, prec_t tol) {
    if (p.empty()) return false;
    for (prec_t x : p)
        if (!std::isfinite(x) || x < -tol) return false;
    return std::abs(sum(p) - 1.0) <= tol;
}

prec_t kl_divergence(std::span<const prec_t> q, std::span<const prec_t> w) {
    if (q.size() != w.size()) throw InvalidArgument("kl_divergence: dimension mismatch");
    prec_t s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] <= 0.0) continue;
        if (w[i] <= 0.0) return inf;
        s += q[i] * std::log(q[i] / w[i]);
    }
    return s;
}

numvec solve_linear_system(Matrix A, numvec b) {
    const std::size_t n = A.rows();
    if (A.cols() != n) throw InvalidArgument("solve_linear_system: matrix is not square");
    if (b.size() != n) throw InvalidArgument("solve_linear_system: rhs dimension mismatch");

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(A(i, k)) > std::abs(A(piv, k))) piv = i;
        if (std::abs(A(piv, k)) <= pivot_tol)
            throw SingularMatrix("pivot " + std::to_string(k) + " below threshold");
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(A(k, j), A(piv, j));
            std::swap(b[k], b[piv]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const prec_t f = A(i, k) / A(k, k);
            if (f == 0.0) continue;
            for (std::size_t j = k; j < n; ++j) A(i, j) -= f * A(k, j);
            b[i] -= f * b[k];
        }
    }
    numvec x(n);
    for (std::size_t k = n; k-- > 0;) {
        prec_t s = b[k];
        for (std::size_t j = k + 1; j < n; ++j) s -= A(k, j) * x[j];
        x[k] = s / A(k, k);
    }
    return x;
}

// ---------------------------------------------------------------------------
// Linear programming

LinearProgram LinearProgram::nonnegative(std::size_t n, Sense sense) {
    LinearProgram lp;
    lp.sense = sense;
    lp.cost.assign(n, 0.0);
    lp.eq_matrix = Matrix(0, n);
    lp.ub_matrix = Matrix(0, n);
    lp.lower.assign(n, 0.0);
    lp.upper.assign(n, inf);
    return lp;
}

void LinearProgram::add_equality(std::span<const prec_t> row, prec_t rhs) {
    eq_matrix.append_row(row);
    eq_rhs.push_back(rhs);
}

void LinearProgram::add_inequality(std::span<const prec_t> row, prec_t rhs) {
    ub_matrix.append_row(row);
    ub_rhs.push_back(rhs);
}

void LinearProgram::validate() const {
    const std::size_t n = n_vars();
    if (lower.size() != n || upper.size() != n)
        throw InvalidArgument("LP bound vectors do not match the variable count");
    if (eq_matrix.rows() > 0 && eq_matrix.cols() != n)
        throw InvalidArgument("LP equality rows do not match the variable count");
    if (ub_matrix.rows() > 0 && ub_matrix.cols() != n)
        throw InvalidArgument("LP inequality rows do not match the variable count");
    if (eq_matrix.rows() != eq_rhs.size() || ub_matrix.rows() != ub_rhs.size())
        throw InvalidArgument("LP right-hand side length mismatch");
    for (std::size_t j = 0; j < n; ++j) {
        if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j])
            throw InvalidArgument("LP bounds invalid for variable " + std::to_string(j));
        if (lower[j] == inf || upper[j] == -inf)
            throw InvalidArgument("LP bound at the wrong infinity for variable " + std::to_string(j));
    }
}

namespace {

// How an original variable is expressed through nonnegative standard-form columns.
struct VarMap {
    enum Kind { shifted, reflected, split } kind = shifted;
    std::size_t col = 0;   // first standard-form column
    prec_t offset = 0.0;   // lower bound (shifted) or upper bound (reflected)
};

// Dense tableau for  min c'y  s.t.  M y = rhs, y >= 0, rhs >= 0.
class Tableau {
public:
    Tableau(std::size_t m, std::size_t n) : m_(m), n_(n), t_(m + 1, n + 1), basis_(m) {}

    prec_t& a(std::size_t i, std::size_t j) { return t_(i, j); }
    prec_t& rhs(std::size_t i) { return t_(i, n_); }
    prec_t& reduced(std::size_t j) { return t_(m_, j); }
    prec_t& objective() { return t_(m_, n_); }
    std::vector<std::size_t>& basis() { return basis_; }
    std::size_t rows() const { return m_; }
    std::size_t cols() const { return n_; }

    void pivot(std::size_t r, std::size_t c) {
        const prec_t p = t_(r, c);
        for (std::size_t j = 0; j <= n_; ++j) t_(r, j) /= p;
        t_(r, c) = 1.0;
        for (std::size_t i = 0; i <= m_; ++i) {
            if (i == r) continue;
            const prec_t f = t_(i, c);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j <= n_; ++j) t_(i, j) -= f * t_(r, j);
            t_(i, c) = 0.0;
        }
        basis_[r] = c;
    }

    // Sets the objective row to c minus the basic contributions.
    void price(const numvec& c) {
        for (std::size_t j = 0; j <= n_; ++j) t_(m_, j) = j < n_ ? c[j] : 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
            const prec_t cb = c[basis_[i]];
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j <= n_; ++j) t_(m_, j) -= cb * t_(i, j);
        }
    }

    void drop_row(std::size_t r) {
        Matrix t(m_, n_ + 1);
        std::size_t k = 0;
        for (std::size_t i = 0; i <= m_; ++i) {
            if (i == r) continue;
            for (std::size_t j = 0; j <= n_; ++j) t(k, j) = t_(i, j);
            ++k;
        }
        t_ = std::move(t);
        basis_.erase(basis_.begin() + static_cast<long>(r));
        --m_;
    }

private:
    std::size_t m_;
    std::size_t n_;
    Matrix t_;
    std::vector<std::size_t> basis_;
};

enum class PhaseResult { optimal, unbounded };

// Bland's rule on columns [0, allowed). Objective row holds reduced costs.
PhaseResult run_simplex(Tableau& tab, std::size_t allowed, std::size_t& pivots, std::size_t cap) {
    constexpr prec_t cost_tol = 1e-11;
    while (true) {
        std::size_t enter = allowed;
        for (std::size_t j = 0; j < allowed; ++j)
            if (tab.reduced(j) < -cost_tol) {
                enter = j;
                break;
            }
        if (enter == allowed) return PhaseResult::optimal;

        std::size_t leave = tab.rows();
        prec_t best = inf;
        for (std::size_t i = 0; i < tab.rows(); ++i) {
            const prec_t aij = tab.a(i, enter);
            if (aij <= pivot_tol) continue;
            const prec_t ratio = tab.rhs(i) / aij;
            const prec_t tie = 1e-13 * std::max(1.0, std::abs(ratio));
            if (leave == tab.rows() || ratio < best - tie ||
                (ratio <= best + tie && tab.basis()[i] < tab.basis()[leave])) {
                best = ratio;
                leave = i;
            }
        }
        if (leave == tab.rows()) return PhaseResult::unbounded;
        if (++pivots > cap)
            throw NumericalBreakdown("simplex pivot budget of " + std::to_string(cap) + " exhausted");
        tab.pivot(leave, enter);
        for (std::size_t i = 0; i < tab.rows(); ++i)
            if (tab.rhs(i) < 0.0 && tab.rhs(i) > -feasibility_tol) tab.rhs(i) = 0.0;
    }
}

} // namespace

LpSolution solve_lp(const LinearProgram& lp) {
    lp.validate();
    const std::size_t n = lp.n_vars();
    const prec_t sign = lp.sense == Sense::minimize ? 1.0 : -1.0;

    // Map original variables to nonnegative columns.
    std::vector<VarMap> vars(n);
    std::size_t ncols = 0;
    std::vector<std::pair<std::size_t, prec_t>> upper_rows; // column, width
    for (std::size_t j = 0; j < n; ++j) {
        VarMap& v = vars[j];
        if (std::isfinite(lp.lower[j])) {
            v.kind = VarMap::shifted;
            v.offset = lp.lower[j];
            v.col = ncols++;
            if (std::isfinite(lp.upper[j])) upper_rows.emplace_back(v.col, lp.upper[j] - lp.lower[j]);
        } else if (std::isfinite(lp.upper[j])) {
            v.kind = VarMap::reflected;
            v.offset = lp.upper[j];
            v.col = ncols++;
        } else {
            v.kind = VarMap::split;
            v.col = ncols;
            ncols += 2;
        }
    }

    // Collect rows as (coefficients over structural columns, rhs, has slack).
    struct Row {
        numvec coef;
        prec_t rhs;
        bool slack;
    };
    std::vector<Row> rows;
    auto add_row = [&](std::span<const prec_t> orig, prec_t rhs, bool slack) {
        Row r{numvec(ncols, 0.0), rhs, slack};
        for (std::size_t j = 0; j < n; ++j) {
            const prec_t a = orig[j];
            if (a == 0.0) continue;
            const VarMap& v = vars[j];
            switch (v.kind) {
            case VarMap::shifted:
                r.coef[v.col] += a;
                r.rhs -= a * v.offset;
                break;
            case VarMap::reflected:
                r.coef[v.col] -= a;
                r.rhs -= a * v.offset;
                break;
            case VarMap::split:
                r.coef[v.col] += a;
                r.coef[v.col + 1] -= a;
                break;
            }
        }
        rows.push_back(std::move(r));
    };
    for (std::size_t i = 0; i < lp.eq_matrix.rows(); ++i) add_row(lp.eq_matrix.row(i), lp.eq_rhs[i], false);
    for (std::size_t i = 0; i < lp.ub_matrix.rows(); ++i) add_row(lp.ub_matrix.row(i), lp.ub_rhs[i], true);
    for (auto [col, width] : upper_rows) {
        Row r{numvec(ncols, 0.0), width, true};
        r.coef[col] = 1.0;
        rows.push_back(std::move(r));
    }

    const std::size_t m = rows.size();
    std::size_t nslack = 0;
    for (const auto& r : rows) nslack += r.slack ? 1 : 0;
    const std::size_t art0 = ncols + nslack;
    const std::size_t total = art0 + m;

    Tableau tab(m, total);
    std::size_t s = ncols;
    for (std::size_t i = 0; i < m; ++i) {
        const prec_t flip = rows[i].rhs < 0.0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < ncols; ++j) tab.a(i, j) = flip * rows[i].coef[j];
        if (rows[i].slack) tab.a(i, s++) = flip;
        tab.a(i, art0 + i) = 1.0;
        tab.rhs(i) = flip * rows[i].rhs;
        tab.basis()[i] = art0 + i;
    }

    std::size_t pivots = 0;
    const std::size_t cap = 50000 + 200 * (m + total);

    // Phase 1: minimize the sum of artificials.
    numvec c1(total, 0.0);
    for (std::size_t i = 0; i < m; ++i) c1[art0 + i] = 1.0;
    tab.price(c1);
    run_simplex(tab, total, pivots, cap);
    prec_t rhs_scale = 1.0;
    for (std::size_t i = 0; i < m; ++i) rhs_scale = std::max(rhs_scale, std::abs(rows[i].rhs));
    if (-tab.objective() > feasibility_tol * rhs_scale) return LpSolution{LpStatus::infeasible, {}, 0.0};

    // Drive artificials out of the basis; drop rows that are redundant.
    for (std::size_t i = 0; i < tab.rows();) {
        if (tab.basis()[i] < art0) {
            ++i;
            continue;
        }
        std::size_t c = art0;
        for (std::size_t j = 0; j < art0; ++j)
            if (std::abs(tab.a(i, j)) > 1e-9) {
                c = j;
                break;
            }
        if (c == art0) {
            tab.drop_row(i);
        } else {
            tab.pivot(i, c);
            ++i;
        }
    }

    // Phase 2 on structural and slack columns only.
    numvec c2(total, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const prec_t cj = sign * lp.cost[j];
        const VarMap& v = vars[j];
        switch (v.kind) {
        case VarMap::shifted: c2[v.col] += cj; break;
        case VarMap::reflected: c2[v.col] -= cj; break;
        case VarMap::split:
            c2[v.col] += cj;
            c2[v.col + 1] -= cj;
            break;
        }
    }
    tab.price(c2);
    if (run_simplex(tab, art0, pivots, cap) == PhaseResult::unbounded)
        return LpSolution{LpStatus::unbounded, {}, sign * -inf};

    numvec y(total, 0.0);
    for (std::size_t i = 0; i < tab.rows(); ++i) y[tab.basis()[i]] = std::max(0.0, tab.rhs(i));
    LpSolution sol;
    sol.status = LpStatus::optimal;
    sol.point.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const VarMap& v = vars[j];
        switch (v.kind) {
        case VarMap::shifted: sol.point[j] = v.offset + y[v.col]; break;
        case VarMap::reflected: sol.point[j] = v.offset - y[v.col]; break;
        case VarMap::split: sol.point[j] = y[v.col] - y[v.col + 1]; break;
        }
    }
    sol.value = dot(lp.cost, sol.point);
    return sol;
}

// ---------------------------------------------------------------------------

numvec project_simplex(std::span<const prec_t> z) {
    if (z.empty()) throw InvalidArgument("project_simplex: empty vector");
    numvec u(z.begin(), z.end());
    std::sort(u.begin(), u.end(), std::greater<>());
    prec_t cum = 0.0;
    prec_t tau = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        cum += u[k];
        const prec_t t = (cum - 1.0) / static_cast<prec_t>(k + 1);
        if (u[k] - t > 0.0) tau = t;
    }
    numvec p(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) p[i] = std::max(0.0, z[i] - tau);
    // Remove rounding drift in the total mass.
    const prec_t total = sum(p);
    for (prec_t& x : p) x /= total;
    return p;
}

namespace {
void check_weights(std::span<const prec_t> weights, std::span<const prec_t> y, prec_t b) {
    if (weights.size() != y.size()) throw InvalidArgument("weights and exponents differ in length");
    if (!(b > 0.0)) throw InvalidArgument("inverse temperature b must be positive");
    bool any = false;
    for (prec_t w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidWeights("weights must be finite and nonnegative");
        any = any || w > 0.0;
    }
    if (!any) throw InvalidWeights("weights are all zero");
}
} // namespace

prec_t scaled_log_sum_exp(std::span<const prec_t> weights, std::span<const prec_t> y, prec_t b) {
    check_weights(weights, y, b);
    prec_t top = -inf;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (weights[i] > 0.0) top = std::max(top, y[i]);
    prec_t acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (weights[i] > 0.0) acc += weights[i] * std::exp(b * (y[i] - top));
    return top + std::log(acc) / b;
}

numvec softmax_weights(std::span<const prec_t> weights, std::span<const prec_t> y, prec_t b) {
    check_weights(weights, y, b);
    prec_t top = -inf;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (weights[i] > 0.0) top = std::max(top, y[i]);
    numvec q(y.size(), 0.0);
    for (std::size_t i = 0; i < y.size(); ++i)
        if (weights[i] > 0.0) q[i] = weights[i] * std::exp(b * (y[i] - top));
    const prec_t total = sum(q);
    for (prec_t& x : q) x /= total;
    return q;
}

} // namespace crmdp

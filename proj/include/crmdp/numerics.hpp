#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace crmdp {

using prec_t = double;
using numvec = std::vector<prec_t>;
using indvec = std::vector<long>;

constexpr prec_t inf = std::numeric_limits<prec_t>::infinity();

/// Feasibility tolerance shared by the LP solver and set membership checks.
constexpr prec_t feasibility_tol = 1e-9;
/// Smallest pivot magnitude accepted by Gaussian elimination and simplex.
constexpr prec_t pivot_tol = 1e-12;

/// Dense row-major matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, prec_t fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);
    static Matrix from_rows(const std::vector<numvec>& rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    prec_t& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    prec_t operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<prec_t> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const prec_t> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    /// Appends a row; the first row appended to an empty 0x0 matrix fixes the column count.
    void append_row(std::span<const prec_t> values);

    numvec multiply(std::span<const prec_t> x) const;
    /// Computes transpose(this) * y without forming the transpose.
    numvec multiply_transposed(std::span<const prec_t> y) const;
    Matrix transpose() const;

    const numvec& data() const { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    numvec data_;
};

// Small vector helpers used across the library.
prec_t dot(std::span<const prec_t> a, std::span<const prec_t> b);
prec_t norm_inf(std::span<const prec_t> a);
prec_t max_abs_diff(std::span<const prec_t> a, std::span<const prec_t> b);
prec_t sum(std::span<const prec_t> a);
/// theta * a + (1 - theta) * b
numvec interpolate(std::span<const prec_t> a, std::span<const prec_t> b, prec_t theta);
/// True when every entry is nonnegative and the entries sum to one (both within tol).
bool is_simplex_point(std::span<const prec_t> p, prec_t tol = 1e-9);
/// KL(q || w) = sum_a q_a log(q_a / w_a) with 0 log 0 = 0.
prec_t kl_divergence(std::span<const prec_t> q, std::span<const prec_t> w);

/**
Solves A x = b by Gaussian elimination with partial pivoting.
Throws SingularMatrix when a pivot falls below pivot_tol in magnitude.
*/
numvec solve_linear_system(Matrix A, numvec b);

enum class Sense { minimize, maximize };

/**
A dense linear program

    optimize  cost' x
    s.t.      eq_matrix x  = eq_rhs
              ub_matrix x <= ub_rhs
              lower <= x <= upper

Bounds may be infinite. An empty constraint block is a 0 x n matrix.
*/
struct LinearProgram {
    Sense sense = Sense::minimize;
    numvec cost;
    Matrix eq_matrix;
    numvec eq_rhs;
    Matrix ub_matrix;
    numvec ub_rhs;
    numvec lower;
    numvec upper;

    /// LP over n variables with bounds [0, inf) and no constraints.
    static LinearProgram nonnegative(std::size_t n, Sense sense = Sense::minimize);

    std::size_t n_vars() const { return cost.size(); }
    void add_equality(std::span<const prec_t> row, prec_t rhs);
    void add_inequality(std::span<const prec_t> row, prec_t rhs);
    /// Throws InvalidArgument when dimensions are inconsistent or lower > upper.
    void validate() const;
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpSolution {
    LpStatus status = LpStatus::infeasible;
    numvec point;
    prec_t value = 0.0;
};

/**
Two-phase dense tableau simplex with Bland's lowest-index rule.

Infeasible and unbounded programs are reported through the status, not
thrown. Throws NumericalBreakdown when the pivot budget is exhausted.
*/
LpSolution solve_lp(const LinearProgram& lp);

/// Euclidean projection onto the probability simplex (sort and threshold).
numvec project_simplex(std::span<const prec_t> z);

/**
Computes (1/b) log sum_a w_a exp(b y_a) with the largest exponent factored
out, so no intermediate exponent exceeds zero. Entries with zero weight are
ignored. Throws InvalidWeights for negative or all-zero weights and
InvalidArgument for b <= 0.
*/
prec_t scaled_log_sum_exp(std::span<const prec_t> weights, std::span<const prec_t> y, prec_t b);

/// Maximizer of q'y - KL(q, w)/b over the simplex: q proportional to w exp(b y).
numvec softmax_weights(std::span<const prec_t> weights, std::span<const prec_t> y, prec_t b);

} // namespace crmdp

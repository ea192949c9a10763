#include "crmdp/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "crmdp/errors.hpp"

namespace crmdp {

LinearProgram polyhedral_lp(const Matrix& A, std::span<const prec_t> c, std::size_t n_blocks, std::size_t block) {
    const std::size_t n = n_blocks * block;
    LinearProgram lp = LinearProgram::nonnegative(n);
    numvec row(n);
    for (std::size_t k = 0; k < n_blocks; ++k) {
        std::fill(row.begin(), row.end(), 0.0);
        std::fill(row.begin() + static_cast<long>(k * block), row.begin() + static_cast<long>((k + 1) * block), 1.0);
        lp.add_equality(row, 1.0);
    }
    for (std::size_t i = 0; i < A.rows(); ++i) lp.add_inequality(A.row(i), c[i]);
    return lp;
}

UncertaintySet UncertaintySet::singleton(numvec p) {
    if (!is_simplex_point(p)) throw InvalidArgument("singleton set needs a probability distribution");
    return UncertaintySet(Singleton{std::move(p)});
}

UncertaintySet UncertaintySet::box(numvec lower, numvec upper) {
    if (lower.empty() || lower.size() != upper.size()) throw InvalidArgument("box bounds differ in length");
    for (std::size_t i = 0; i < lower.size(); ++i)
        if (!(lower[i] >= 0.0 && lower[i] <= upper[i] && upper[i] <= 1.0))
            throw InvalidArgument("box bounds must satisfy 0 <= lower <= upper <= 1");
    if (sum(lower) > 1.0 + feasibility_tol || sum(upper) < 1.0 - feasibility_tol)
        throw EmptySet("box does not intersect the simplex");
    return UncertaintySet(BoxSimplex{std::move(lower), std::move(upper)});
}

UncertaintySet UncertaintySet::polyhedral(Matrix A, numvec c) {
    if (A.rows() != c.size()) throw InvalidArgument("polyhedral set: A and c differ in row count");
    if (A.rows() == 0) throw InvalidArgument("polyhedral set needs at least one row; use simplex() instead");
    const LpSolution sol = solve_lp(polyhedral_lp(A, c, 1, A.cols()));
    if (sol.status != LpStatus::optimal) throw EmptySet("polyhedral set is empty");
    return UncertaintySet(Polyhedral{std::move(A), std::move(c)});
}

UncertaintySet UncertaintySet::simplex(std::size_t n) {
    return UncertaintySet(BoxSimplex{numvec(n, 0.0), numvec(n, 1.0)});
}

std::size_t UncertaintySet::n_states() const {
    return std::visit(
        [](const auto& d) -> std::size_t {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Singleton>) return d.nominal.size();
            else if constexpr (std::is_same_v<T, BoxSimplex>) return d.lower.size();
            else return d.A.cols();
        },
        data_);
}

bool UncertaintySet::contains(std::span<const prec_t> p, prec_t tol) const {
    if (p.size() != n_states() || !is_simplex_point(p, tol)) return false;
    return std::visit(
        [&](const auto& d) -> bool {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Singleton>) {
                return max_abs_diff(p, d.nominal) <= tol;
            } else if constexpr (std::is_same_v<T, BoxSimplex>) {
                for (std::size_t i = 0; i < p.size(); ++i)
                    if (p[i] < d.lower[i] - tol || p[i] > d.upper[i] + tol) return false;
                return true;
            } else {
                const numvec ap = d.A.multiply(p);
                for (std::size_t i = 0; i < ap.size(); ++i)
                    if (ap[i] > d.c[i] + tol) return false;
                return true;
            }
        },
        data_);
}

bool UncertaintySet::operator==(const UncertaintySet& o) const {
    if (data_.index() != o.data_.index()) return false;
    return std::visit(
        [&](const auto& d) -> bool {
            using T = std::decay_t<decltype(d)>;
            const T& e = std::get<T>(o.data_);
            if constexpr (std::is_same_v<T, Singleton>) return d.nominal == e.nominal;
            else if constexpr (std::is_same_v<T, BoxSimplex>) return d.lower == e.lower && d.upper == e.upper;
            else return d.A == e.A && d.c == e.c;
        },
        data_);
}

namespace {

InnerResult box_greedy(const BoxSimplex& box, std::span<const prec_t> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    numvec p = box.lower;
    prec_t mass = 1.0 - sum(p);
    for (std::size_t i : order) {
        if (mass <= 0.0) break;
        const prec_t add = std::min(mass, box.upper[i] - p[i]);
        p[i] += add;
        mass -= add;
    }
    return {dot(p, v), std::move(p)};
}

} // namespace

InnerResult inner_min(const UncertaintySet& set, std::span<const prec_t> v) {
    if (v.size() != set.n_states()) throw InvalidArgument("inner_min: dimension mismatch");
    return std::visit(
        [&](const auto& d) -> InnerResult {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Singleton>) {
                return {dot(d.nominal, v), d.nominal};
            } else if constexpr (std::is_same_v<T, BoxSimplex>) {
                return box_greedy(d, v);
            } else {
                LinearProgram lp = polyhedral_lp(d.A, d.c, 1, d.A.cols());
                lp.cost.assign(v.begin(), v.end());
                LpSolution sol = solve_lp(lp);
                if (sol.status != LpStatus::optimal) throw EmptySet("polyhedral set became infeasible");
                for (prec_t& x : sol.point) x = std::max(0.0, x);
                return {dot(sol.point, v), std::move(sol.point)};
            }
        },
        set.data());
}

InnerResult inner_max(const UncertaintySet& set, std::span<const prec_t> v) {
    numvec neg(v.begin(), v.end());
    for (prec_t& x : neg) x = -x;
    InnerResult r = inner_min(set, neg);
    r.value = dot(r.minimizer, v);
    return r;
}

std::vector<numvec> polytope_vertices(const Matrix& Aeq, std::span<const prec_t> beq, const Matrix& Aub,
                                      std::span<const prec_t> bub) {
    const std::size_t n = std::max(Aeq.cols(), Aub.cols());
    const std::size_t me = Aeq.rows();
    // Candidate active inequalities: x_j >= 0 (index j < n) and rows of Aub (index n + i).
    const std::size_t nc = n + Aub.rows();
    if (me > n) return {};
    const std::size_t need = n - me;

    auto feasible = [&](const numvec& x) {
        constexpr prec_t tol = 1e-9;
        for (prec_t xi : x)
            if (xi < -tol) return false;
        for (std::size_t i = 0; i < Aub.rows(); ++i)
            if (dot(Aub.row(i), x) > bub[i] + tol) return false;
        for (std::size_t i = 0; i < me; ++i)
            if (std::abs(dot(Aeq.row(i), x) - beq[i]) > tol) return false;
        return true;
    };

    std::vector<numvec> out;
    std::vector<std::size_t> pick(need);
    std::iota(pick.begin(), pick.end(), 0);
    if (need > nc) return {};
    while (true) {
        Matrix M(n, n);
        numvec rhs(n);
        for (std::size_t i = 0; i < me; ++i) {
            for (std::size_t j = 0; j < n; ++j) M(i, j) = Aeq(i, j);
            rhs[i] = beq[i];
        }
        for (std::size_t k = 0; k < need; ++k) {
            const std::size_t idx = pick[k];
            if (idx < n) {
                M(me + k, idx) = 1.0;
                rhs[me + k] = 0.0;
            } else {
                for (std::size_t j = 0; j < n; ++j) M(me + k, j) = Aub(idx - n, j);
                rhs[me + k] = bub[idx - n];
            }
        }
        try {
            numvec x = solve_linear_system(M, rhs);
            if (feasible(x)) {
                for (prec_t& xi : x)
                    if (std::abs(xi) < 1e-13) xi = 0.0;
                bool dup = false;
                for (const auto& y : out)
                    if (max_abs_diff(x, y) <= 1e-9) {
                        dup = true;
                        break;
                    }
                if (!dup) out.push_back(std::move(x));
            }
        } catch (const SingularMatrix&) {
        }
        // Next combination in lexicographic order.
        std::size_t k = need;
        while (k > 0 && pick[k - 1] == nc - need + (k - 1)) --k;
        if (k == 0) break;
        ++pick[k - 1];
        for (std::size_t j = k; j < need; ++j) pick[j] = pick[j - 1] + 1;
    }
    return out;
}

std::vector<numvec> vertices(const UncertaintySet& set) {
    const std::size_t n = set.n_states();
    if (set.is_singleton()) return {std::get<Singleton>(set.data()).nominal};
    const UncertaintySet poly = set.is_box() ? box_as_polyhedral(set) : set;
    const auto& d = std::get<Polyhedral>(poly.data());
    if (n > 10 || d.A.rows() > 12 + (set.is_box() ? 2 * n : 0))
        throw TooLarge("vertex enumeration is limited to 10 states and 12 rows");
    Matrix eq(1, n, 1.0);
    const numvec one{1.0};
    return polytope_vertices(eq, one, d.A, d.c);
}

UncertaintySet box_from_nominal(std::span<const prec_t> p, prec_t lower_factor, prec_t upper_factor) {
    if (!(lower_factor >= 0.0 && lower_factor <= 1.0 && upper_factor >= 1.0))
        throw InvalidFactors("box factors must satisfy 0 <= lower <= 1 <= upper");
    if (!is_simplex_point(p)) throw InvalidArgument("nominal distribution is not a simplex point");
    numvec lo(p.size()), hi(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        lo[i] = lower_factor * p[i];
        hi[i] = std::isinf(upper_factor) ? 1.0 : std::min(upper_factor * p[i], 1.0);
        hi[i] = std::max(hi[i], lo[i]);
    }
    return UncertaintySet::box(std::move(lo), std::move(hi));
}

UncertaintySet box_as_polyhedral(const UncertaintySet& set) {
    numvec lo, hi;
    if (const auto* b = std::get_if<BoxSimplex>(&set.data())) {
        lo = b->lower;
        hi = b->upper;
    } else if (const auto* s = std::get_if<Singleton>(&set.data())) {
        lo = s->nominal;
        hi = s->nominal;
    } else {
        return set;
    }
    const std::size_t n = lo.size();
    Matrix A(2 * n, n);
    numvec c(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        A(i, i) = 1.0;
        c[i] = hi[i];
        A(n + i, i) = -1.0;
        c[n + i] = -lo[i];
    }
    return UncertaintySet::polyhedral(std::move(A), std::move(c));
}

// ---------------------------------------------------------------------------

SRectangularSet::SRectangularSet(std::size_t n_actions, std::size_t n_states, Matrix A, numvec c)
    : n_actions_(n_actions), n_states_(n_states), A_(std::move(A)), c_(std::move(c)) {
    if (n_actions_ == 0 || n_states_ == 0) throw InvalidArgument("s-rectangular set needs states and actions");
    if (A_.rows() == 0) A_ = Matrix(0, n_actions_ * n_states_);
    if (A_.cols() != n_actions_ * n_states_ || A_.rows() != c_.size())
        throw InvalidArgument("s-rectangular set: joint matrix must have A*S columns and match c");
    const LpSolution sol = solve_lp(polyhedral_lp(A_, c_, n_actions_, n_states_));
    if (sol.status != LpStatus::optimal) throw EmptySet("s-rectangular set is empty");
}

SRectangularSet SRectangularSet::product(const std::vector<UncertaintySet>& sets) {
    if (sets.empty()) throw InvalidArgument("product of zero sets");
    const std::size_t A = sets.size();
    const std::size_t S = sets.front().n_states();
    Matrix joint(0, A * S);
    numvec c;
    numvec row(A * S);
    for (std::size_t a = 0; a < A; ++a) {
        const UncertaintySet poly = box_as_polyhedral(sets[a]);
        const auto& d = std::get<Polyhedral>(poly.data());
        for (std::size_t i = 0; i < d.A.rows(); ++i) {
            std::fill(row.begin(), row.end(), 0.0);
            for (std::size_t t = 0; t < S; ++t) row[a * S + t] = d.A(i, t);
            joint.append_row(row);
            c.push_back(d.c[i]);
        }
    }
    return SRectangularSet(A, S, std::move(joint), std::move(c));
}

bool SRectangularSet::contains(std::span<const prec_t> joint, prec_t tol) const {
    if (joint.size() != n_actions_ * n_states_) return false;
    for (std::size_t a = 0; a < n_actions_; ++a)
        if (!is_simplex_point(joint.subspan(a * n_states_, n_states_), tol)) return false;
    if (A_.rows() == 0) return true;
    const numvec ap = A_.multiply(joint);
    for (std::size_t i = 0; i < ap.size(); ++i)
        if (ap[i] > c_[i] + tol) return false;
    return true;
}

JointResult joint_linear_min(const SRectangularSet& set, const Matrix& g) {
    const std::size_t A = set.n_actions();
    const std::size_t S = set.n_states();
    if (g.rows() != A || g.cols() != S) throw InvalidArgument("joint objective must be A x S");
    LinearProgram lp = polyhedral_lp(set.A(), set.c(), A, S);
    lp.cost = g.data();
    const LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::optimal) throw EmptySet("s-rectangular set became infeasible");
    JointResult r;
    r.value = 0.0;
    for (std::size_t a = 0; a < A; ++a) {
        numvec p(S);
        for (std::size_t t = 0; t < S; ++t) p[t] = std::max(0.0, sol.point[a * S + t]);
        r.value += dot(g.row(a), p);
        r.minimizers.push_back(std::move(p));
    }
    return r;
}

JointResult inner_min_srect(const SRectangularSet& set, std::span<const prec_t> weights,
                            std::span<const prec_t> v) {
    if (weights.size() != set.n_actions() || v.size() != set.n_states())
        throw InvalidArgument("inner_min_srect: dimension mismatch");
    Matrix g(set.n_actions(), set.n_states());
    for (std::size_t a = 0; a < set.n_actions(); ++a)
        for (std::size_t t = 0; t < set.n_states(); ++t) g(a, t) = weights[a] * v[t];
    return joint_linear_min(set, g);
}

std::vector<std::vector<numvec>> joint_vertices(const SRectangularSet& set) {
    const std::size_t A = set.n_actions();
    const std::size_t S = set.n_states();
    if (A * S > 12 || set.A().rows() > 12) throw TooLarge("joint vertex enumeration is limited to 12 coordinates");
    const LinearProgram lp = polyhedral_lp(set.A(), set.c(), A, S);
    std::vector<std::vector<numvec>> out;
    for (const numvec& x : polytope_vertices(lp.eq_matrix, lp.eq_rhs, lp.ub_matrix, lp.ub_rhs)) {
        std::vector<numvec> per(A);
        for (std::size_t a = 0; a < A; ++a)
            per[a].assign(x.begin() + static_cast<long>(a * S), x.begin() + static_cast<long>((a + 1) * S));
        out.push_back(std::move(per));
    }
    return out;
}

} // namespace crmdp

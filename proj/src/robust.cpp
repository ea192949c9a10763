#include "crmdp/robust.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crmdp/errors.hpp"

namespace crmdp {

Rmdp::Rmdp(Mdp base, std::vector<UncertaintySet> sets)
    : base_(std::move(base)), rect_(Rectangularity::sa), sa_sets_(std::move(sets)) {
    if (sa_sets_.size() != base_.n_states() * base_.n_actions())
        throw ValidationError("need one uncertainty set per state-action pair");
    for (const auto& u : sa_sets_)
        if (u.n_states() != base_.n_states()) throw ValidationError("uncertainty set has the wrong dimension");
}

Rmdp::Rmdp(Mdp base, std::vector<SRectangularSet> sets)
    : base_(std::move(base)), rect_(Rectangularity::s), s_sets_(std::move(sets)) {
    if (s_sets_.size() != base_.n_states()) throw ValidationError("need one joint set per state");
    for (const auto& u : s_sets_)
        if (u.n_states() != base_.n_states() || u.n_actions() != base_.n_actions())
            throw ValidationError("joint set has the wrong dimension");
}

Rmdp Rmdp::nominal(const Mdp& base) {
    std::vector<UncertaintySet> sets;
    for (std::size_t s = 0; s < base.n_states(); ++s)
        for (std::size_t a = 0; a < base.n_actions(); ++a) {
            const auto p = base.transition(s, a);
            sets.push_back(UncertaintySet::singleton(numvec(p.begin(), p.end())));
        }
    return Rmdp(base, std::move(sets));
}

Rmdp Rmdp::boxes(const Mdp& base, prec_t lower_factor, prec_t upper_factor) {
    std::vector<UncertaintySet> sets;
    for (std::size_t s = 0; s < base.n_states(); ++s)
        for (std::size_t a = 0; a < base.n_actions(); ++a)
            sets.push_back(box_from_nominal(base.transition(s, a), lower_factor, upper_factor));
    return Rmdp(base, std::move(sets));
}

const UncertaintySet& Rmdp::set(std::size_t s, std::size_t a) const {
    if (rect_ != Rectangularity::sa) throw UsageError("model is s-rectangular; no per-action sets");
    return sa_sets_.at(s * n_actions() + a);
}

const SRectangularSet& Rmdp::s_set(std::size_t s) const {
    if (rect_ != Rectangularity::s) throw UsageError("model is sa-rectangular; no joint sets");
    return s_sets_.at(s);
}

bool Rmdp::all_polyhedral() const {
    if (rect_ != Rectangularity::sa) return false;
    return std::all_of(sa_sets_.begin(), sa_sets_.end(), [](const auto& u) { return u.is_polyhedral(); });
}

Rmdp Rmdp::as_polyhedral() const {
    if (rect_ != Rectangularity::sa) throw UsageError("polyhedral conversion applies to sa-rectangular models");
    std::vector<UncertaintySet> sets;
    for (const auto& u : sa_sets_) sets.push_back(box_as_polyhedral(u));
    return Rmdp(base_, std::move(sets));
}

Rmdp Rmdp::with_scaled_rewards(prec_t factor) const {
    Rmdp out = *this;
    out.base_ = base_.with_scaled_rewards(factor);
    return out;
}

Matrix robust_q_values(const Rmdp& rmdp, std::span<const prec_t> v) {
    if (v.size() != rmdp.n_states()) throw InvalidArgument("value vector has the wrong dimension");
    Matrix q(rmdp.n_states(), rmdp.n_actions());
    for (std::size_t s = 0; s < rmdp.n_states(); ++s)
        for (std::size_t a = 0; a < rmdp.n_actions(); ++a)
            q(s, a) = rmdp.reward(s, a) + rmdp.discount() * inner_min(rmdp.set(s, a), v).value;
    return q;
}

ValueVector robust_bellman(const Rmdp& rmdp, std::span<const prec_t> v) {
    if (rmdp.rectangularity() == Rectangularity::s) return s_rect_robust_bellman(rmdp, v).value;
    const Matrix q = robust_q_values(rmdp, v);
    ValueVector out(rmdp.n_states());
    for (std::size_t s = 0; s < rmdp.n_states(); ++s) {
        const auto row = q.row(s);
        out[s] = *std::max_element(row.begin(), row.end());
    }
    return out;
}

ValueVector robust_bellman_policy(const Rmdp& rmdp, const Policy& pi, std::span<const prec_t> v) {
    if (v.size() != rmdp.n_states()) throw InvalidArgument("value vector has the wrong dimension");
    ValueVector out(rmdp.n_states(), 0.0);
    for (std::size_t s = 0; s < rmdp.n_states(); ++s) {
        for (std::size_t a = 0; a < rmdp.n_actions(); ++a) out[s] += pi(s, a) * rmdp.reward(s, a);
        if (rmdp.rectangularity() == Rectangularity::s) {
            out[s] += rmdp.discount() * inner_min_srect(rmdp.s_set(s), pi.row(s), v).value;
        } else {
            for (std::size_t a = 0; a < rmdp.n_actions(); ++a)
                if (pi(s, a) > 0.0) out[s] += pi(s, a) * rmdp.discount() * inner_min(rmdp.set(s, a), v).value;
        }
    }
    return out;
}

ValueResult robust_value_iteration(const Rmdp& rmdp, prec_t tol, std::size_t max_iterations) {
    if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
    ValueVector v(rmdp.n_states(), 0.0);
    for (std::size_t k = 0; k <= max_iterations; ++k) {
        ValueVector next = robust_bellman(rmdp, v);
        const prec_t res = max_abs_diff(v, next);
        if (res <= tol) return {std::move(v), k, res};
        v = std::move(next);
    }
    throw IterationLimit("robust value iteration did not reach the tolerance");
}

ValueVector robust_policy_evaluation(const Rmdp& rmdp, const Policy& pi, prec_t tol, std::size_t max_iterations) {
    if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
    // Warm start from the nominal evaluation; it is close when sets are small.
    ValueVector v = policy_evaluation(rmdp.base(), pi);
    for (std::size_t k = 0; k <= max_iterations; ++k) {
        ValueVector next = robust_bellman_policy(rmdp, pi, v);
        if (max_abs_diff(v, next) <= tol) return v;
        v = std::move(next);
    }
    throw IterationLimit("robust policy evaluation did not reach the tolerance");
}

Policy robust_greedy_policy(const Rmdp& rmdp, std::span<const prec_t> v) {
    if (rmdp.rectangularity() == Rectangularity::s) return s_rect_robust_bellman(rmdp, v).policy;
    const Matrix q = robust_q_values(rmdp, v);
    std::vector<std::size_t> act(rmdp.n_states(), 0);
    for (std::size_t s = 0; s < rmdp.n_states(); ++s)
        for (std::size_t a = 1; a < rmdp.n_actions(); ++a)
            if (q(s, a) > q(s, act[s])) act[s] = a;
    return Policy::deterministic(act, rmdp.n_actions());
}

PolicyResult robust_policy_iteration(const Rmdp& rmdp, prec_t tol, std::size_t max_iterations) {
    Policy pi = robust_greedy_policy(rmdp, ValueVector(rmdp.n_states(), 0.0));
    for (std::size_t k = 1; k <= max_iterations; ++k) {
        ValueVector v = robust_policy_evaluation(rmdp, pi, tol);
        Policy next = robust_greedy_policy(rmdp, v);
        // Accept a new policy only when it improves by more than the evaluation error.
        const ValueVector cur = robust_bellman_policy(rmdp, pi, v);
        const ValueVector cand = robust_bellman_policy(rmdp, next, v);
        bool improves = false;
        for (std::size_t s = 0; s < rmdp.n_states(); ++s)
            if (cand[s] > cur[s] + 10.0 * tol) improves = true;
        if (!improves || next == pi) {
            const prec_t res = max_abs_diff(v, robust_bellman(rmdp, v));
            return {std::move(pi), std::move(v), k, res};
        }
        pi = std::move(next);
    }
    throw IterationLimit("robust policy iteration did not settle");
}

Matrix worst_case_transitions(const Rmdp& rmdp, const Policy& pi, prec_t tol) {
    const std::size_t S = rmdp.n_states();
    const std::size_t A = rmdp.n_actions();
    const ValueVector v = robust_policy_evaluation(rmdp, pi, tol);
    Matrix P(S * A, S);
    for (std::size_t s = 0; s < S; ++s) {
        if (rmdp.rectangularity() == Rectangularity::s) {
            const JointResult j = inner_min_srect(rmdp.s_set(s), pi.row(s), v);
            for (std::size_t a = 0; a < A; ++a)
                for (std::size_t t = 0; t < S; ++t) P(s * A + a, t) = j.minimizers[a][t];
        } else {
            for (std::size_t a = 0; a < A; ++a) {
                const InnerResult r = inner_min(rmdp.set(s, a), v);
                for (std::size_t t = 0; t < S; ++t) P(s * A + a, t) = r.minimizer[t];
            }
        }
    }
    return P;
}

ValueVector optimistic_bellman(const Rmdp& rmdp, std::span<const prec_t> v) {
    if (v.size() != rmdp.n_states()) throw InvalidArgument("value vector has the wrong dimension");
    const std::size_t S = rmdp.n_states();
    const std::size_t A = rmdp.n_actions();
    ValueVector out(S, -inf);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            prec_t best;
            if (rmdp.rectangularity() == Rectangularity::s) {
                // Maximize p_a' v over the joint set: minimize with -v on block a only.
                Matrix g(A, S);
                for (std::size_t t = 0; t < S; ++t) g(a, t) = -v[t];
                best = -joint_linear_min(rmdp.s_set(s), g).value;
            } else {
                best = inner_max(rmdp.set(s, a), v).value;
            }
            out[s] = std::max(out[s], rmdp.reward(s, a) + rmdp.discount() * best);
        }
    return out;
}

SRectStep s_rect_robust_bellman(const Rmdp& rmdp, std::span<const prec_t> v) {
    if (v.size() != rmdp.n_states()) throw InvalidArgument("value vector has the wrong dimension");
    const std::size_t S = rmdp.n_states();
    const std::size_t A = rmdp.n_actions();
    if (rmdp.rectangularity() == Rectangularity::sa) {
        // Product sets: the per-action greedy solution is optimal.
        return {robust_bellman(rmdp, v), robust_greedy_policy(rmdp, v)};
    }
    SRectStep step{ValueVector(S), Policy()};
    Matrix probs(S, A);
    for (std::size_t s = 0; s < S; ++s) {
        const SRectangularSet& U = rmdp.s_set(s);
        const std::size_t m = U.A().rows();
        if (A * S + m > 400) throw TooLarge("joint LP for the s-rectangular update is too large");
        // Variables: pi (A, >= 0), mu (A, free), eta (m, >= 0).
        // max sum_a pi_a r_a + sum_a mu_a - c' eta
        // s.t. mu_a - [A' eta]_{a s'} - discount v_{s'} pi_a <= 0, sum pi = 1.
        const std::size_t n = 2 * A + m;
        LinearProgram lp = LinearProgram::nonnegative(n, Sense::maximize);
        for (std::size_t a = 0; a < A; ++a) {
            lp.cost[a] = rmdp.reward(s, a);
            lp.cost[A + a] = 1.0;
            lp.lower[A + a] = -inf;
        }
        for (std::size_t i = 0; i < m; ++i) lp.cost[2 * A + i] = -U.c()[i];
        numvec row(n);
        for (std::size_t a = 0; a < A; ++a)
            for (std::size_t t = 0; t < S; ++t) {
                std::fill(row.begin(), row.end(), 0.0);
                row[A + a] = 1.0;
                row[a] = -rmdp.discount() * v[t];
                for (std::size_t i = 0; i < m; ++i) row[2 * A + i] = -U.A()(i, a * S + t);
                lp.add_inequality(row, 0.0);
            }
        std::fill(row.begin(), row.end(), 0.0);
        std::fill(row.begin(), row.begin() + static_cast<long>(A), 1.0);
        lp.add_equality(row, 1.0);
        const LpSolution sol = solve_lp(lp);
        if (sol.status != LpStatus::optimal) throw EmptySet("s-rectangular update LP has no optimum");
        numvec pi(sol.point.begin(), sol.point.begin() + static_cast<long>(A));
        for (prec_t& x : pi) x = std::max(0.0, x);
        const prec_t total = sum(pi);
        for (std::size_t a = 0; a < A; ++a) probs(s, a) = pi[a] / total;
        step.value[s] = sol.value;
    }
    step.policy = Policy(std::move(probs));
    return step;
}

} // namespace crmdp

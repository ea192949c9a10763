#include "crmdp/mdp.hpp"

#include <cmath>
#include <string>

#include "crmdp/errors.hpp"

namespace crmdp {

namespace {
std::string sa_name(std::size_t s, std::size_t a) {
    return "(s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")";
}
} // namespace

Mdp::Mdp(Matrix rewards, Matrix transitions, prec_t discount, numvec initial)
    : rewards_(std::move(rewards)), transitions_(std::move(transitions)), discount_(discount),
      initial_(std::move(initial)) {
    const std::size_t S = rewards_.rows();
    const std::size_t A = rewards_.cols();
    if (S == 0 || A == 0) throw ValidationError("model needs at least one state and one action");
    if (transitions_.rows() != S * A || transitions_.cols() != S)
        throw ValidationError("transition array must be S x A x S");
    if (!(discount_ > 0.0 && discount_ < 1.0))
        throw ValidationError("discount must lie in (0, 1), got " + std::to_string(discount_));
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const prec_t r = rewards_(s, a);
            if (!std::isfinite(r) || r < 0.0)
                throw ValidationError("reward at " + sa_name(s, a) + " must be finite and nonnegative");
            if (!is_simplex_point(transition(s, a)))
                throw ValidationError("nominal transition at " + sa_name(s, a) +
                                      " is not a probability distribution");
        }
    if (initial_.size() != S || !is_simplex_point(initial_))
        throw ValidationError("initial distribution must be a probability distribution over states");
}

Mdp Mdp::with_scaled_rewards(prec_t factor) const {
    if (!(factor > 0.0) || !std::isfinite(factor)) throw InvalidArgument("reward scale must be positive");
    Matrix r = rewards_;
    for (std::size_t s = 0; s < r.rows(); ++s)
        for (std::size_t a = 0; a < r.cols(); ++a) r(s, a) *= factor;
    return Mdp(std::move(r), transitions_, discount_, initial_);
}

Policy::Policy(Matrix probabilities) : probs_(std::move(probabilities)) {
    for (std::size_t s = 0; s < probs_.rows(); ++s)
        if (!is_simplex_point(probs_.row(s)))
            throw InvalidArgument("policy row " + std::to_string(s) + " is not a distribution");
}

Policy Policy::deterministic(std::span<const std::size_t> actions, std::size_t n_actions) {
    Matrix m(actions.size(), n_actions);
    for (std::size_t s = 0; s < actions.size(); ++s) {
        if (actions[s] >= n_actions) throw InvalidArgument("action index out of range");
        m(s, actions[s]) = 1.0;
    }
    return Policy(std::move(m));
}

Policy Policy::uniform(std::size_t n_states, std::size_t n_actions) {
    return Policy(Matrix(n_states, n_actions, 1.0 / static_cast<prec_t>(n_actions)));
}

std::size_t Policy::action(std::size_t s) const {
    std::size_t best = 0;
    for (std::size_t a = 1; a < n_actions(); ++a)
        if (probs_(s, a) > probs_(s, best)) best = a;
    return best;
}

namespace {
prec_t q_value(const Mdp& mdp, std::size_t s, std::size_t a, std::span<const prec_t> v) {
    return mdp.reward(s, a) + mdp.discount() * dot(mdp.transition(s, a), v);
}

void check_dim(const Mdp& mdp, std::span<const prec_t> v) {
    if (v.size() != mdp.n_states()) throw InvalidArgument("value vector has the wrong dimension");
}
} // namespace

ValueVector bellman(const Mdp& mdp, std::span<const prec_t> v) {
    check_dim(mdp, v);
    ValueVector out(mdp.n_states(), -inf);
    for (std::size_t s = 0; s < mdp.n_states(); ++s)
        for (std::size_t a = 0; a < mdp.n_actions(); ++a) out[s] = std::max(out[s], q_value(mdp, s, a, v));
    return out;
}

ValueVector bellman_policy(const Mdp& mdp, const Policy& pi, std::span<const prec_t> v) {
    check_dim(mdp, v);
    ValueVector out(mdp.n_states(), 0.0);
    for (std::size_t s = 0; s < mdp.n_states(); ++s)
        for (std::size_t a = 0; a < mdp.n_actions(); ++a)
            if (pi(s, a) > 0.0) out[s] += pi(s, a) * q_value(mdp, s, a, v);
    return out;
}

ValueResult value_iteration(const Mdp& mdp, std::span<const prec_t> v0, prec_t tol,
                            std::size_t max_iterations) {
    if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
    ValueVector v(v0.begin(), v0.end());
    for (std::size_t k = 0; k <= max_iterations; ++k) {
        ValueVector next = bellman(mdp, v);
        const prec_t res = max_abs_diff(v, next);
        if (res <= tol) return {std::move(v), k, res};
        v = std::move(next);
    }
    throw IterationLimit("value iteration did not reach the tolerance");
}

ValueResult value_iteration(const Mdp& mdp, prec_t tol) {
    return value_iteration(mdp, ValueVector(mdp.n_states(), 0.0), tol);
}

ValueVector policy_evaluation(const Mdp& mdp, const Policy& pi) {
    const std::size_t S = mdp.n_states();
    Matrix M = Matrix::identity(S);
    numvec rhs(S, 0.0);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
            const prec_t w = pi(s, a);
            if (w == 0.0) continue;
            rhs[s] += w * mdp.reward(s, a);
            const auto p = mdp.transition(s, a);
            for (std::size_t t = 0; t < S; ++t) M(s, t) -= mdp.discount() * w * p[t];
        }
    return solve_linear_system(std::move(M), std::move(rhs));
}

Policy greedy_policy(const Mdp& mdp, std::span<const prec_t> v) {
    check_dim(mdp, v);
    std::vector<std::size_t> act(mdp.n_states(), 0);
    for (std::size_t s = 0; s < mdp.n_states(); ++s) {
        prec_t best = q_value(mdp, s, 0, v);
        for (std::size_t a = 1; a < mdp.n_actions(); ++a) {
            const prec_t q = q_value(mdp, s, a, v);
            if (q > best) {
                best = q;
                act[s] = a;
            }
        }
    }
    return Policy::deterministic(act, mdp.n_actions());
}

PolicyResult policy_iteration(const Mdp& mdp) {
    const double cap_d = std::pow(static_cast<double>(mdp.n_actions()), static_cast<double>(mdp.n_states())) + 1;
    const std::size_t cap = cap_d > 1e7 ? 10000000 : static_cast<std::size_t>(cap_d);
    Policy pi = greedy_policy(mdp, ValueVector(mdp.n_states(), 0.0));
    for (std::size_t k = 1; k <= cap; ++k) {
        ValueVector v = policy_evaluation(mdp, pi);
        Policy next = greedy_policy(mdp, v);
        // Keep the current action when it is still greedy to avoid cycling between ties.
        bool changed = false;
        for (std::size_t s = 0; s < mdp.n_states(); ++s) {
            const std::size_t cur = pi.action(s);
            const std::size_t cand = next.action(s);
            if (cand != cur && q_value(mdp, s, cand, v) > q_value(mdp, s, cur, v) + 1e-12 * (1.0 + std::abs(v[s])))
                changed = true;
        }
        if (!changed) {
            const prec_t res = max_abs_diff(v, bellman(mdp, v));
            return {std::move(pi), std::move(v), k, res};
        }
        pi = std::move(next);
    }
    throw IterationLimit("policy iteration exceeded |A|^|S| + 1 improvements");
}

prec_t return_of(const Mdp& mdp, const Policy& pi) { return dot(mdp.initial(), policy_evaluation(mdp, pi)); }

LinearProgram build_primal_lp(const Mdp& mdp) {
    const std::size_t S = mdp.n_states();
    LinearProgram lp = LinearProgram::nonnegative(S, Sense::minimize);
    lp.cost = mdp.initial();
    lp.lower.assign(S, -inf);
    numvec row(S);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
            // -(v_s - discount * P_sa' v) <= -r_sa
            const auto p = mdp.transition(s, a);
            for (std::size_t t = 0; t < S; ++t) row[t] = mdp.discount() * p[t];
            row[s] -= 1.0;
            lp.add_inequality(row, -mdp.reward(s, a));
        }
    return lp;
}

LinearProgram build_dual_lp(const Mdp& mdp) {
    const std::size_t S = mdp.n_states();
    const std::size_t A = mdp.n_actions();
    LinearProgram lp = LinearProgram::nonnegative(S * A, Sense::maximize);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) lp.cost[s * A + a] = mdp.reward(s, a);
    numvec row(S * A);
    for (std::size_t t = 0; t < S; ++t) {
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a)
                row[s * A + a] = (s == t ? 1.0 : 0.0) - mdp.discount() * mdp.transition(s, a)[t];
        lp.add_equality(row, mdp.initial()[t]);
    }
    return lp;
}

Matrix occupancy_of_policy(const Mdp& mdp, const Policy& pi) {
    const std::size_t S = mdp.n_states();
    const std::size_t A = mdp.n_actions();
    // State occupancy d solves (I - discount * P_pi') d = initial.
    Matrix M = Matrix::identity(S);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const prec_t w = pi(s, a);
            if (w == 0.0) continue;
            const auto p = mdp.transition(s, a);
            for (std::size_t t = 0; t < S; ++t) M(t, s) -= mdp.discount() * w * p[t];
        }
    const numvec d = solve_linear_system(std::move(M), mdp.initial());
    Matrix mu(S, A);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) mu(s, a) = std::max(0.0, d[s]) * pi(s, a);
    return mu;
}

} // namespace crmdp

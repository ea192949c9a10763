#pragma once

#include <cstddef>
#include <span>

#include "crmdp/numerics.hpp"

namespace crmdp {

using ValueVector = numvec;

/**
A finite discounted MDP with nonnegative rewards.

Transitions are stored as an (S*A) x S matrix; row s*A + a holds P[s][a][.].
The model is validated on construction and immutable afterwards.
*/
class Mdp {
public:
    /// rewards is S x A. Throws ValidationError naming the first violated invariant.
    Mdp(Matrix rewards, Matrix transitions, prec_t discount, numvec initial);

    std::size_t n_states() const { return rewards_.rows(); }
    std::size_t n_actions() const { return rewards_.cols(); }
    prec_t reward(std::size_t s, std::size_t a) const { return rewards_(s, a); }
    std::span<const prec_t> transition(std::size_t s, std::size_t a) const {
        return transitions_.row(s * n_actions() + a);
    }
    prec_t discount() const { return discount_; }
    const numvec& initial() const { return initial_; }
    const Matrix& rewards() const { return rewards_; }
    const Matrix& transitions() const { return transitions_; }

    /// Copy of this model with rewards multiplied by factor (factor > 0).
    Mdp with_scaled_rewards(prec_t factor) const;

    bool operator==(const Mdp&) const = default;

private:
    Matrix rewards_;
    Matrix transitions_;
    prec_t discount_;
    numvec initial_;
};

/// Stationary randomized policy, one distribution over actions per state.
class Policy {
public:
    Policy() = default;
    /// probabilities is S x A; each row must be a simplex point within 1e-9.
    explicit Policy(Matrix probabilities);

    static Policy deterministic(std::span<const std::size_t> actions, std::size_t n_actions);
    static Policy uniform(std::size_t n_states, std::size_t n_actions);

    std::size_t n_states() const { return probs_.rows(); }
    std::size_t n_actions() const { return probs_.cols(); }
    prec_t operator()(std::size_t s, std::size_t a) const { return probs_(s, a); }
    std::span<const prec_t> row(std::size_t s) const { return probs_.row(s); }
    const Matrix& probabilities() const { return probs_; }

    /// Index of the largest probability in state s, lowest index on ties.
    std::size_t action(std::size_t s) const;

    bool operator==(const Policy&) const = default;

private:
    Matrix probs_;
};

struct ValueResult {
    ValueVector value;
    std::size_t iterations = 0;
    prec_t residual = 0.0;
};

struct PolicyResult {
    Policy policy;
    ValueVector value;
    std::size_t iterations = 0;
    prec_t residual = 0.0;
};

/// (T v)_s = max_a r_sa + discount * P_sa' v
ValueVector bellman(const Mdp& mdp, std::span<const prec_t> v);
/// Expectation of the one-step lookahead under pi.
ValueVector bellman_policy(const Mdp& mdp, const Policy& pi, std::span<const prec_t> v);

/// Stops on the Bellman residual ||v - T v||_inf <= tol. Throws IterationLimit.
ValueResult value_iteration(const Mdp& mdp, std::span<const prec_t> v0, prec_t tol,
                            std::size_t max_iterations = 1000000);
ValueResult value_iteration(const Mdp& mdp, prec_t tol);

/// Exact solve of (I - discount * P_pi) v = r_pi.
ValueVector policy_evaluation(const Mdp& mdp, const Policy& pi);

/// Howard's policy iteration from the reward-greedy policy.
PolicyResult policy_iteration(const Mdp& mdp);

/// Deterministic argmax policy, lowest action index on ties.
Policy greedy_policy(const Mdp& mdp, std::span<const prec_t> v);

/// initial' v^pi
prec_t return_of(const Mdp& mdp, const Policy& pi);

/// min initial' v  s.t.  v_s - discount * P_sa' v >= r_sa.
LinearProgram build_primal_lp(const Mdp& mdp);
/// max sum mu_sa r_sa over occupancy frequencies; variable index s*A + a.
LinearProgram build_dual_lp(const Mdp& mdp);

/// Discounted state-action occupancy of pi (S x A).
Matrix occupancy_of_policy(const Mdp& mdp, const Policy& pi);

} // namespace crmdp

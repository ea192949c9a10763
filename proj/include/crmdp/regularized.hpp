#pragma once

#include <cstddef>
#include <span>
#include <utility>

#include "crmdp/robust.hpp"

namespace crmdp {

/// Largest exponent allowed before exp() is considered an overflow risk.
constexpr prec_t exponent_guard = 700.0;

/// Baseline policy and inverse temperature for the entropic regularizer.
struct RegularizationConfig {
    Policy baseline;
    prec_t b = 1.0;

    RegularizationConfig() = default;
    /// Throws InvalidArgument unless every baseline entry and b are positive.
    RegularizationConfig(Policy baseline, prec_t b);
    static RegularizationConfig uniform(std::size_t n_states, std::size_t n_actions, prec_t b);
};

using TransformedVector = numvec;

/// exp(b v) componentwise. Throws OverflowRisk when b * max v exceeds the guard.
TransformedVector exp_b(std::span<const prec_t> v, prec_t b);
/// log(x) / b componentwise. Throws DomainError for x <= 0.
ValueVector log_b(std::span<const prec_t> x, prec_t b);

/// Entropy-regularized robust Bellman operator (log-sum-exp form).
ValueVector regularized_bellman(const Rmdp& rmdp, const RegularizationConfig& cfg, std::span<const prec_t> v);

/// log of t_tilde(x) computed without leaving the log domain; x > 0.
numvec log_t_tilde(const Rmdp& rmdp, const RegularizationConfig& cfg, std::span<const prec_t> x);

/// sum_a nu_sa exp(b r_sa) exp(discount min_p p' log x). Throws OverflowRisk.
TransformedVector t_tilde(const Rmdp& rmdp, const RegularizationConfig& cfg, std::span<const prec_t> x);

/// Banach iteration on the regularized operator from v = 0.
ValueResult regularized_fixed_point(const Rmdp& rmdp, const RegularizationConfig& cfg, prec_t tol,
                                    std::size_t max_iterations = 1000000);

struct SandwichMargins {
    prec_t lower = 0.0; // min_s T(v)_s - Treg(v)_s
    prec_t upper = 0.0; // min_s Treg(v)_s + log|A|/b - T(v)_s
};

SandwichMargins sandwich_margins(const Rmdp& rmdp, const RegularizationConfig& cfg, std::span<const prec_t> v);

/// log(n_actions) / (epsilon (1 - discount)). Throws InvalidEpsilon for epsilon <= 0.
prec_t choose_b(prec_t epsilon, prec_t discount, std::size_t n_actions);

/// Rewards divided by their maximum; returns the model and the factor applied.
std::pair<Rmdp, prec_t> rescale_rewards(const Rmdp& rmdp);

struct SRectTransformResult {
    TransformedVector value;
    numvec gap; // Frank-Wolfe duality gap per state, an upper bound on the error
};

/**
Transformed operator for s-rectangular sets:
min over the joint set of sum_a nu_sa exp(b r_sa) exp(discount p_a' log x).
The objective is convex in the joint variable, so it is minimized by
Frank-Wolfe with exact line search and a duality-gap stopping rule.
*/
SRectTransformResult t_tilde_srect(const Rmdp& rmdp, const RegularizationConfig& cfg, std::span<const prec_t> x,
                                   prec_t rel_tol = 1e-10, std::size_t max_iterations = 20000);

} // namespace crmdp

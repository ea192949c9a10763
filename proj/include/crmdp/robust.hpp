#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "crmdp/mdp.hpp"
#include "crmdp/uncertainty.hpp"

namespace crmdp {

enum class Rectangularity { sa, s };

/// Nominal model plus rectangular transition uncertainty.
class Rmdp {
public:
    /// sa-rectangular: one set per (s, a), index s*A + a.
    Rmdp(Mdp base, std::vector<UncertaintySet> sets);
    /// s-rectangular: one joint set per state.
    Rmdp(Mdp base, std::vector<SRectangularSet> sets);

    /// Every set is the singleton at the nominal transition.
    static Rmdp nominal(const Mdp& base);
    /// Box sets around the nominal transitions.
    static Rmdp boxes(const Mdp& base, prec_t lower_factor, prec_t upper_factor);

    const Mdp& base() const { return base_; }
    std::size_t n_states() const { return base_.n_states(); }
    std::size_t n_actions() const { return base_.n_actions(); }
    prec_t discount() const { return base_.discount(); }
    prec_t reward(std::size_t s, std::size_t a) const { return base_.reward(s, a); }
    Rectangularity rectangularity() const { return rect_; }

    /// Throws UsageError on an s-rectangular model.
    const UncertaintySet& set(std::size_t s, std::size_t a) const;
    /// Throws UsageError on an sa-rectangular model.
    const SRectangularSet& s_set(std::size_t s) const;
    const std::vector<UncertaintySet>& sa_sets() const { return sa_sets_; }
    const std::vector<SRectangularSet>& s_sets() const { return s_sets_; }

    /// True when every sa set is polyhedral.
    bool all_polyhedral() const;
    /// Same model with every box or singleton rewritten as A p <= c.
    Rmdp as_polyhedral() const;
    Rmdp with_scaled_rewards(prec_t factor) const;

    bool operator==(const Rmdp&) const = default;

private:
    Mdp base_;
    Rectangularity rect_;
    std::vector<UncertaintySet> sa_sets_;
    std::vector<SRectangularSet> s_sets_;
};

/// Robust one-step values y_sa = r_sa + discount * min_p p' v, as an S x A matrix.
Matrix robust_q_values(const Rmdp& rmdp, std::span<const prec_t> v);

/// max_a min_p (r_sa + discount p' v); dispatches to s_rect_robust_bellman for s-rectangular models.
ValueVector robust_bellman(const Rmdp& rmdp, std::span<const prec_t> v);
ValueVector robust_bellman_policy(const Rmdp& rmdp, const Policy& pi, std::span<const prec_t> v);

ValueResult robust_value_iteration(const Rmdp& rmdp, prec_t tol, std::size_t max_iterations = 1000000);
ValueVector robust_policy_evaluation(const Rmdp& rmdp, const Policy& pi, prec_t tol = 1e-10,
                                     std::size_t max_iterations = 1000000);
PolicyResult robust_policy_iteration(const Rmdp& rmdp, prec_t tol = 1e-10, std::size_t max_iterations = 10000);

/// Deterministic for sa-rectangular models; for s-rectangular models the LP maximizer, which may randomize.
Policy robust_greedy_policy(const Rmdp& rmdp, std::span<const prec_t> v);

/// Worst-case kernel against pi, as (S*A) x S with row s*A + a.
Matrix worst_case_transitions(const Rmdp& rmdp, const Policy& pi, prec_t tol = 1e-10);

/// max_a max_p (r_sa + discount p' v).
ValueVector optimistic_bellman(const Rmdp& rmdp, std::span<const prec_t> v);

struct SRectStep {
    ValueVector value;
    Policy policy;
};

/// Robust Bellman update for s-rectangular sets, one LP per state.
SRectStep s_rect_robust_bellman(const Rmdp& rmdp, std::span<const prec_t> v);

} // namespace crmdp

#pragma once

#include <cstddef>
#include <span>

#include "crmdp/regularized.hpp"

namespace crmdp {

/// t = exp_b o T o log_b, evaluated in the log domain. Throws OverflowRisk.
numvec t_operator(const Rmdp& rmdp, prec_t b, std::span<const prec_t> x);

/// Robust Bellman operator regularized by (1/2b) ||pi_s - nu_s||^2, via the simplex projection closed form.
ValueVector l2_regularized_bellman(const Rmdp& rmdp, const Policy& nu, prec_t b, std::span<const prec_t> v);

/// phi_b(v)_s = (b v_s)^2 and its inverse on the nonnegative orthant.
numvec phi_b(std::span<const prec_t> v, prec_t b);
numvec phi_b_inverse(std::span<const prec_t> w, prec_t b);

/// phi_b^{-1} o Tl2 o phi_b
numvec l2_phi_conjugate(const Rmdp& rmdp, const Policy& nu, prec_t b, std::span<const prec_t> z);
/// phi_b o Tl2 o phi_b^{-1}
numvec l2_phi_inverse_conjugate(const Rmdp& rmdp, const Policy& nu, prec_t b, std::span<const prec_t> w);

struct KlInnerResult {
    prec_t value = 0.0;
    numvec multipliers; // y >= 0, one per row of A
    numvec distribution; // primal distribution recovered from y
    std::size_t iterations = 0;
};

/**
min over {p in simplex : A p <= c} of p' v + KL(p, nominal)/b, computed through
its dual max_{y >= 0} -c'y - (1/b) log sum_s nominal_s exp(-b (v_s + a_s' y))
by projected gradient ascent with backtracking. nominal must be positive.
Throws NonConvergence when the projected gradient does not fall below tol.
*/
KlInnerResult kl_transition_inner(std::span<const prec_t> v, const UncertaintySet& set,
                                  std::span<const prec_t> nominal, prec_t b, prec_t tol = 1e-10,
                                  std::size_t max_iterations = 200000);

/// Dual objective of kl_transition_inner at a given y >= 0 (a lower bound on the primal value).
prec_t kl_transition_dual_objective(std::span<const prec_t> v, const Polyhedral& set, std::span<const prec_t> nominal,
                                    prec_t b, std::span<const prec_t> y);

/// max_a r_sa + discount * kl_transition_inner(v, U_sa, P_sa, b), nominal kernel from the base model.
ValueVector kl_transition_regularized_bellman(const Rmdp& rmdp, prec_t b, std::span<const prec_t> v,
                                              prec_t tol = 1e-10);

} // namespace crmdp

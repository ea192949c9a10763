#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "crmdp/convex_solver.hpp"

namespace crmdp {

/// A model whose every per-(s, a) set is Polyhedral. Boxes and singletons are converted on construction.
class PolyhedralRmdp {
public:
    /// Throws UsageError for s-rectangular models.
    explicit PolyhedralRmdp(const Rmdp& rmdp);

    const Rmdp& model() const { return rmdp_; }
    const Polyhedral& set(std::size_t s, std::size_t a) const;

private:
    Rmdp rmdp_;
};

/**
Conjugate of f(p) = prod_s x_s^(discount p_s) over p in R^S.
Finite only on the ray y = alpha log x with alpha >= 0, where it equals
(alpha/discount) log(alpha/discount) - alpha/discount (0 log 0 = 0). For
x = all ones it is -1 at y = 0 and +inf elsewhere.
*/
prec_t conjugate_f(std::span<const prec_t> x, std::span<const prec_t> y, prec_t discount);

/// Dual multipliers of the inner problem for one (s, a).
struct DualVariables {
    numvec gamma;        // one per row of A, >= 0
    prec_t alpha = 0.0;  // >= 0
    numvec mu;           // simplex-sign multipliers of the explicit-mu form
    prec_t theta = 0.0;  // simplex-mass multiplier of the explicit-mu form
};

/// -c'gamma + min_s' {alpha log x_s' + [A'gamma]_s'} - (alpha/l) log(alpha/l) + alpha/l.
prec_t dual_objective(std::span<const prec_t> x, const Polyhedral& set, prec_t discount, std::span<const prec_t> gamma,
                      prec_t alpha);

/// -c'gamma + theta - f*(-A'gamma + mu + theta e): the form before mu and theta are eliminated.
prec_t dual_objective_with_multipliers(std::span<const prec_t> x, const Polyhedral& set, prec_t discount,
                                       const DualVariables& d);

enum class DualMethod {
    homogeneous_lp, // exact: scale out alpha and solve the remaining LP
    supergradient,  // projected supergradient ascent with Polyak steps
};

struct DualInnerResult {
    prec_t value = 0.0;        // dual objective at the returned multipliers
    prec_t primal_value = 0.0; // exp(discount * min_p p' log x)
    DualVariables duals;
    std::size_t iterations = 0;
};

/**
Maximizes the dual objective of min over the set of prod x^(discount p).
Throws NonConvergence when the supergradient method misses tol.
*/
DualInnerResult dual_inner_value(std::span<const prec_t> x, const Polyhedral& set, prec_t discount, prec_t tol = 1e-9,
                                 DualMethod method = DualMethod::homogeneous_lp, std::size_t max_iterations = 200000);

/// alpha log x_s' - (alpha/l) log(alpha/l), with 0 log 0 = 0.
prec_t perspective_h(std::size_t s_prime, prec_t alpha, std::span<const prec_t> x, prec_t discount);
/// Perspective of log: alpha log(x_s' / alpha).
prec_t perspective_g1(std::size_t s_prime, prec_t alpha, std::span<const prec_t> x);
/// alpha log alpha - (alpha/l) log(alpha/l).
prec_t perspective_g2(prec_t alpha, prec_t discount);

/// Multipliers for every (s, a), index s*A + a, plus one epigraph value per pair.
struct ConciseDuals {
    std::vector<DualVariables> duals;
    numvec tau;
};

/**
Right-hand side for state s with a separate epigraph value per action:
sum_a w_sa min_s' (-c'gamma + h_s'(alpha, x) + [A'gamma]_s' + alpha/l).
With optimal multipliers this reproduces t_tilde(x)_s.
*/
prec_t concise_rhs(const PolyhedralRmdp& prmdp, const RegularizationConfig& cfg, std::span<const prec_t> x,
                   const ConciseDuals& d, std::size_t s);

/**
Right-hand side with the pair (s, s') shared across actions, as the
constraint family reads when taken literally:
min_s' sum_a w_sa (-c'gamma + h_s'(alpha, x) + [A'gamma]_s' + alpha/l).
It is never smaller than concise_rhs and can be unbounded above.
*/
prec_t concise_rhs_shared(const PolyhedralRmdp& prmdp, const RegularizationConfig& cfg, std::span<const prec_t> x,
                          const ConciseDuals& d, std::size_t s);

struct ConciseSolution {
    TransformedVector x;
    ConciseDuals duals;
    SolveReport report;
};

/**
Solves the concise program over (x, gamma, alpha, tau). For fixed x the
multiplier block is solved exactly by dual_inner_value; x is driven by the
same exact-penalty ascent as solve_convex_program.
*/
ConciseSolution solve_concise_program(const PolyhedralRmdp& prmdp, const RegularizationConfig& cfg,
                                      const PenaltyOptions& opts = {});

} // namespace crmdp

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crmdp/regularized.hpp"
#include "crmdp/report.hpp"

namespace crmdp {

/**
Settings for the exact-penalty ascent on max sum x s.t. x <= t(x), x >= 1.

Each round rescales the variables around the best point found so far and
runs inner_iterations normalized supergradient steps of size step / sqrt(k).
The step shrinks when a round stops moving and the penalty grows by
penalty_growth while the best point violates the constraints by more than
the current step.
*/
struct PenaltyOptions {
    prec_t initial_penalty = 0.0; // 0 selects 10 |S|
    prec_t penalty_growth = 10.0;
    prec_t initial_step = 0.5;
    prec_t min_step = 1e-11;
    std::size_t max_rounds = 2000;
    std::size_t inner_iterations = 100;
    prec_t feasibility_tol = 1e-6;

    void validate() const;
};

/// Function value and supergradient rows of a concave map x -> F(x) >= 0.
struct ConstraintOracle {
    numvec value;
    Matrix jacobian; // row s is a supergradient of F_s
};

using ConstraintFunction = std::function<ConstraintOracle(std::span<const prec_t>)>;

struct PenaltyResult {
    numvec x;
    std::size_t iterations = 0;
    std::size_t rounds = 0;
    prec_t residual = 0.0; // max_s (x_s - F_s(x))_+ / max(1, F_s(x))
    prec_t penalty = 0.0;
    bool converged = false;
};

/// Exact-penalty ascent for max sum x s.t. x <= F(x), x >= 1; the engine behind both convex programs.
PenaltyResult penalty_ascent(const ConstraintFunction& F, std::size_t n, const PenaltyOptions& opts);

struct ConvexSolution {
    TransformedVector x;
    SolveReport report;
};

/**
Solves the transformed program max sum x s.t. x <= t_tilde(x), x >= 1.
Throws NonConvergence (with the residual of the best point) when the round
budget runs out, and OverflowRisk when t_tilde leaves the guard.
*/
ConvexSolution solve_convex_program(const Rmdp& rmdp, const RegularizationConfig& cfg,
                                    const PenaltyOptions& opts = {});

/// Row s: supergradient of t_tilde_s at x, taken at the inner minimizers.
Matrix supergradient_t_tilde(const Rmdp& rmdp, const RegularizationConfig& cfg, std::span<const prec_t> x);

/// Relative feasibility residual max_s (x_s - t_tilde(x)_s)_+ / max(1, t_tilde(x)_s).
prec_t convex_program_residual(const Rmdp& rmdp, const RegularizationConfig& cfg, std::span<const prec_t> x);

// ---------------------------------------------------------------------------
// Contraction program checks

using VectorOperator = std::function<ValueVector(std::span<const prec_t>)>;
using Objective = std::function<prec_t(std::span<const prec_t>)>;

struct ContractionCheck {
    std::size_t above_samples = 0; // samples with v >= F(v)
    std::size_t below_samples = 0; // samples with v <= F(v)
    std::size_t violations = 0;
    prec_t worst_margin = 0.0;     // most negative slack found, 0 when none
};

/**
Samples v* + c e and v* - c e for c in [0, spread] plus random perturbations of
v*, keeps those satisfying v >= F(v) or v <= F(v) within 1e-12, and checks
g(v) >= g(v*) on the first set and g(v) <= g(v*) on the second.
Throws NotFixedPoint when ||F(v*) - v*|| exceeds fixed_point_tol.
*/
ContractionCheck contraction_program_check(const VectorOperator& F, const Objective& g,
                                           std::span<const prec_t> v_star, std::size_t samples_per_side,
                                           prec_t spread, unsigned seed, prec_t fixed_point_tol = 1e-9);

// ---------------------------------------------------------------------------
// Segment probes

enum class ProbeOperator {
    robust,              // T
    regularized,         // entropic T
    t_tilde,             // exp_b o entropic T o log_b
    t,                   // exp_b o T o log_b
    optimistic,          // best-case T
    l2_regularized,      // T with quadratic regularizer
    l2_phi,              // phi_b^{-1} o quadratic T o phi_b
    l2_phi_inverse,      // phi_b o quadratic T o phi_b^{-1}
    kl_transition,       // T with KL penalty on transitions
    kl_transition_exp,   // exp_{-b} o KL-transition T o log_{-b}
};

std::string to_string(ProbeOperator op);
/// Throws UsageError for unknown names.
ProbeOperator probe_operator_from_string(const std::string& name);
/// True when the operator takes points in a transformed space rather than values.
bool probe_in_transformed_space(ProbeOperator op);

struct ProbeSample {
    prec_t theta = 0.0;
    prec_t value = 0.0;
};

struct ProbeSpec {
    ProbeOperator op = ProbeOperator::robust;
    std::size_t state = 0;
    numvec from; // endpoint at theta = 1
    numvec to;   // endpoint at theta = 0
    std::size_t samples = 201;
    prec_t b = 1.0;
    std::optional<Policy> baseline; // uniform when empty
};

/// Maps value-space endpoints into the probe's domain (exp_b, phi_b, ...); identity for value-space probes.
numvec probe_domain_point(const ProbeSpec& spec, std::span<const prec_t> v);

/// n equally spaced theta in [0, 1]; value = op(theta from + (1 - theta) to)_state. Throws DomainError.
std::vector<ProbeSample> segment_probe(const Rmdp& rmdp, const ProbeSpec& spec);

enum class Curvature { convex, concave, affine, neither };
std::string to_string(Curvature c);

struct CurvatureReport {
    Curvature verdict = Curvature::affine;
    prec_t convexity_violation = 0.0;  // largest (mid - chord) / scale
    prec_t concavity_violation = 0.0;  // largest (chord - mid) / scale
};

/**
Midpoint test on consecutive triples. The scale of a triple is
max(1, |v_{i-1}|, |v_i|, |v_{i+1}|), so curvature is judged relative to the
local magnitude. Throws TooFewSamples below three samples.
*/
CurvatureReport classify_curvature(const std::vector<ProbeSample>& samples, prec_t tol = 1e-7);

} // namespace crmdp

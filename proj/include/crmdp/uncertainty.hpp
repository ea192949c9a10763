#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "crmdp/numerics.hpp"

namespace crmdp {

struct Singleton {
    numvec nominal;
};

/// {p in simplex : lower <= p <= upper}
struct BoxSimplex {
    numvec lower;
    numvec upper;
};

/// {p in simplex : A p <= c}
struct Polyhedral {
    Matrix A;
    numvec c;
};

/**
Transition uncertainty set for one state-action pair. Every factory
validates its invariants; polyhedral sets are checked for nonemptiness with
an LP at construction.
*/
class UncertaintySet {
public:
    using Variant = std::variant<Singleton, BoxSimplex, Polyhedral>;

    static UncertaintySet singleton(numvec p);
    static UncertaintySet box(numvec lower, numvec upper);
    static UncertaintySet polyhedral(Matrix A, numvec c);
    /// The whole probability simplex over n states.
    static UncertaintySet simplex(std::size_t n);

    std::size_t n_states() const;
    const Variant& data() const { return data_; }
    bool is_singleton() const { return std::holds_alternative<Singleton>(data_); }
    bool is_box() const { return std::holds_alternative<BoxSimplex>(data_); }
    bool is_polyhedral() const { return std::holds_alternative<Polyhedral>(data_); }
    /// Membership within tol.
    bool contains(std::span<const prec_t> p, prec_t tol = 1e-9) const;

    bool operator==(const UncertaintySet& o) const;

private:
    explicit UncertaintySet(Variant d) : data_(std::move(d)) {}
    Variant data_;
};

struct InnerResult {
    prec_t value = 0.0;
    numvec minimizer;
};

/// min over p in the set of p' v.
InnerResult inner_min(const UncertaintySet& set, std::span<const prec_t> v);
/// max over p in the set of p' v.
InnerResult inner_max(const UncertaintySet& set, std::span<const prec_t> v);

/// Extreme points of the set. Throws TooLarge beyond 10 states or 12 rows.
std::vector<numvec> vertices(const UncertaintySet& set);

/// Box with lower_factor * p and min(upper_factor * p, 1). Throws InvalidFactors.
UncertaintySet box_from_nominal(std::span<const prec_t> p, prec_t lower_factor, prec_t upper_factor);

/// Rewrites a box (or singleton) as A p <= c with A = (I; -I), c = (upper; -lower).
UncertaintySet box_as_polyhedral(const UncertaintySet& set);

/**
Extreme points of {x >= 0 : Aeq x = beq, Aub x <= bub} by basis enumeration,
deduplicated within 1e-9. The caller is responsible for size guards.
*/
std::vector<numvec> polytope_vertices(const Matrix& Aeq, std::span<const prec_t> beq, const Matrix& Aub,
                                      std::span<const prec_t> bub);

/**
s-rectangular set for one state: a joint polytope over the concatenated
vector (p_0, ..., p_{A-1}), index a*S + s', intersected with one simplex per
action.
*/
class SRectangularSet {
public:
    SRectangularSet(std::size_t n_actions, std::size_t n_states, Matrix A, numvec c);
    /// Joint set equal to the product of per-action sets.
    static SRectangularSet product(const std::vector<UncertaintySet>& sets);

    std::size_t n_actions() const { return n_actions_; }
    std::size_t n_states() const { return n_states_; }
    const Matrix& A() const { return A_; }
    const numvec& c() const { return c_; }
    bool contains(std::span<const prec_t> joint, prec_t tol = 1e-9) const;

    bool operator==(const SRectangularSet&) const = default;

private:
    std::size_t n_actions_;
    std::size_t n_states_;
    Matrix A_;
    numvec c_;
};

struct JointResult {
    prec_t value = 0.0;
    std::vector<numvec> minimizers; // one distribution per action
};

/// min over the joint set of sum_a g_a' p_a, g given as an A x S matrix.
JointResult joint_linear_min(const SRectangularSet& set, const Matrix& g);

/// min over the joint set of sum_a w_a p_a' v.
JointResult inner_min_srect(const SRectangularSet& set, std::span<const prec_t> weights,
                            std::span<const prec_t> v);

/// Extreme points of the joint set as per-action lists. Throws TooLarge beyond 12 coordinates.
std::vector<std::vector<numvec>> joint_vertices(const SRectangularSet& set);

/// The LP {x >= 0 : simplex rows, A x <= c} behind a polyhedral or joint set, with objective zero.
LinearProgram polyhedral_lp(const Matrix& A, std::span<const prec_t> c, std::size_t n_blocks, std::size_t block);

} // namespace crmdp

#pragma once

// Test-side oracles. Nothing here calls into the library's solvers; the
// builders only construct models from literal data.

#include <cstddef>
#include <functional>
#include <random>
#include <vector>

#include "crmdp/robust.hpp"

namespace oracle {

using crmdp::numvec;

/// Hand-rolled generators on top of a fixed-seed engine.
class Gen {
public:
    explicit Gen(unsigned long long seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
    numvec vector(std::size_t n, double lo, double hi);
    /// Uniform point of the simplex (normalized exponentials).
    numvec simplex(std::size_t n);
    /// Strictly positive simplex point, each entry at least floor.
    numvec interior_simplex(std::size_t n, double floor);
    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

// Example 1 from literal data. Rewards divided by 11 when rescaled.
crmdp::Mdp example1_mdp(bool rescaled = false);
crmdp::Rmdp example1_rmdp(bool rescaled = false);
/// The segment endpoints of the first example, in value space.
numvec example1_v1();
numvec example1_v2();

/// Gaussian elimination without pivot safeguards beyond partial pivoting, kept separate from the library.
numvec solve_dense(std::vector<numvec> A, numvec b);

/// (I - discount P_pi)^{-1} r_pi for a deterministic policy and explicit kernel rows per state.
numvec evaluate(const std::vector<numvec>& kernel_rows, const numvec& rewards, double discount);

/// Optimal nominal value by enumerating every deterministic policy.
numvec brute_force_nominal(const crmdp::Mdp& mdp);

/// Extreme points of {p in simplex : lower <= p <= upper}: all coordinates but one at a bound.
std::vector<numvec> box_vertices(const numvec& lower, const numvec& upper);

/// Robust optimal value for box sets: max over deterministic policies of min over vertex kernels.
numvec brute_force_robust_box(const crmdp::Mdp& mdp, const std::vector<numvec>& lower,
                              const std::vector<numvec>& upper);

/// n evenly spaced points (t, 1 - t) covering the feasible interval of {p in simplex : A p <= c}, ends included.
std::vector<numvec> grid_feasible_two_state(std::size_t n, const crmdp::Matrix& A, const numvec& c);

/// Minimum of f over grid_feasible_two_state.
double grid_min_feasible(std::size_t n, const crmdp::Matrix& A, const numvec& c,
                         const std::function<double(const numvec&)>& f);

/// Membership in {p in simplex : A p <= c}.
bool in_polyhedron(const crmdp::Matrix& A, const numvec& c, const numvec& p, double tol = 1e-12);

/// log sum_i w_i exp(b y_i) / b in long double, no factoring.
double naive_log_sum_exp(const numvec& w, const numvec& y, double b);

/// Central difference of f along coordinate j.
double central_difference(const std::function<double(const numvec&)>& f, numvec x, std::size_t j, double h);

} // namespace oracle

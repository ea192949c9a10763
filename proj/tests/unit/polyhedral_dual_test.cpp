#include <gtest/gtest.h>

#include <cmath>

#include "crmdp/errors.hpp"
#include "crmdp/instance.hpp"
#include "crmdp/polyhedral_dual.hpp"
#include "oracles.hpp"

using namespace crmdp;

namespace {

constexpr double lambda = 0.8;

// min over the set of exp(lambda p' log x), by grid on two-state sets.
double primal_grid(const Polyhedral& P, const numvec& x) {
    const numvec L{std::log(x[0]), std::log(x[1])};
    return std::exp(lambda * oracle::grid_min_feasible(10000, P.A, P.c, [&](const numvec& p) { return dot(p, L); }));
}

} // namespace

TEST(Conjugate, ClosedFormOnTheRay) {
    const numvec x{2.0, 5.0};
    const numvec L{std::log(2.0), std::log(5.0)};
    for (const double alpha : {0.0, lambda, 2 * lambda}) {
        numvec y{alpha * L[0], alpha * L[1]};
        const double q = alpha / lambda;
        const double expect = (q > 0 ? q * std::log(q) : 0.0) - q;
        EXPECT_NEAR(conjugate_f(x, y, lambda), expect, 1e-12);
    }
    EXPECT_EQ(conjugate_f(x, numvec{1.0, 0.0}, lambda), inf);
    EXPECT_EQ(conjugate_f(x, numvec{-L[0], -L[1]}, lambda), inf);
}

TEST(Conjugate, AllOnesPoint) {
    EXPECT_DOUBLE_EQ(conjugate_f(numvec{1, 1}, numvec{0, 0}, lambda), -1.0);
    EXPECT_EQ(conjugate_f(numvec{1, 1}, numvec{0.1, 0}, lambda), inf);
}

TEST(Conjugate, SampledSupremumNeverExceedsClosedForm) {
    oracle::Gen g(81);
    const numvec x{3.0, 1.5};
    const numvec L{std::log(3.0), std::log(1.5)};
    for (const double alpha : {0.0, lambda, 2 * lambda}) {
        const numvec y{alpha * L[0], alpha * L[1]};
        const double closed = conjugate_f(x, y, lambda);
        double sup = -1e300;
        for (int k = 0; k < 20000; ++k) {
            const numvec p = g.vector(2, -10, 10);
            sup = std::max(sup, dot(p, y) - std::exp(lambda * dot(p, L)));
        }
        EXPECT_LE(sup, closed + 1e-7);
        EXPECT_GE(sup, closed - 1e-2);
    }
}

TEST(DualInner, StrongDualityOnExampleSets) {
    oracle::Gen g(82);
    const PolyhedralRmdp pm(oracle::example1_rmdp());
    for (int trial = 0; trial < 20; ++trial) {
        const numvec x = g.vector(2, 1.0, 1e3);
        for (std::size_t a = 0; a < 3; ++a) {
            const Polyhedral& P = pm.set(0, a);
            const DualInnerResult r = dual_inner_value(x, P, lambda);
            EXPECT_NEAR(r.value / r.primal_value, 1.0, 1e-9);
            const double grid = primal_grid(P, x);
            EXPECT_LE(r.primal_value, grid * (1 + 1e-12));
            EXPECT_GE(r.primal_value, grid * (1 - 1e-12));
            EXPECT_NEAR(dual_objective(x, P, lambda, r.duals.gamma, r.duals.alpha), r.value,
                        1e-9 * std::max(1.0, r.value));
        }
    }
}

TEST(DualInner, SupergradientMethodAgreesWithExactSolve) {
    oracle::Gen g(83);
    const PolyhedralRmdp pm(oracle::example1_rmdp());
    for (int trial = 0; trial < 5; ++trial) {
        const numvec x = g.vector(2, 1.0, 20.0);
        const Polyhedral& P = pm.set(0, trial % 3);
        const DualInnerResult exact = dual_inner_value(x, P, lambda);
        const DualInnerResult sg = dual_inner_value(x, P, lambda, 1e-7, DualMethod::supergradient);
        EXPECT_NEAR(sg.value, exact.value, 1e-6 * std::max(1.0, exact.value));
    }
}

TEST(DualInner, WeakDualityForRandomMultipliers) {
    oracle::Gen g(84);
    const PolyhedralRmdp pm(oracle::example1_rmdp());
    const Polyhedral& P = pm.set(0, 1);
    for (int trial = 0; trial < 200; ++trial) {
        const numvec x = g.vector(2, 1.0, 50.0);
        const numvec gamma = g.vector(P.A.rows(), 0, 5);
        const double alpha = g.uniform(0, 5);
        EXPECT_LE(dual_objective(x, P, lambda, gamma, alpha), primal_grid(P, x) * (1 + 1e-12) + 1e-12);
    }
}

TEST(DualInner, ExplicitMultiplierFormAgreesAfterElimination) {
    oracle::Gen g(85);
    const PolyhedralRmdp pm(oracle::example1_rmdp());
    const Polyhedral& P = pm.set(0, 2);
    for (int trial = 0; trial < 50; ++trial) {
        const numvec x = g.vector(2, 1.0, 50.0);
        DualVariables d;
        d.gamma = g.vector(P.A.rows(), 0, 2);
        d.alpha = g.uniform(0.01, 3);
        // theta = min_s' (alpha log x + A'gamma), mu = (alpha log x + A'gamma) - theta.
        const numvec atg = P.A.multiply_transposed(d.gamma);
        numvec z(2);
        for (std::size_t t = 0; t < 2; ++t) z[t] = d.alpha * std::log(x[t]) + atg[t];
        d.theta = std::min(z[0], z[1]);
        d.mu = {z[0] - d.theta, z[1] - d.theta};
        EXPECT_NEAR(dual_objective_with_multipliers(x, P, lambda, d), dual_objective(x, P, lambda, d.gamma, d.alpha),
                    1e-10);
    }
}

TEST(Perspective, SplitsIntoLogPerspectiveAndScalarPart) {
    oracle::Gen g(86);
    for (int trial = 0; trial < 100; ++trial) {
        const numvec x = g.vector(2, 0.5, 100);
        const double alpha = g.uniform(0.001, 10);
        EXPECT_NEAR(perspective_h(1, alpha, x, lambda), perspective_g1(1, alpha, x) + perspective_g2(alpha, lambda),
                    1e-10 * std::max(1.0, std::abs(perspective_h(1, alpha, x, lambda))));
    }
    // g2'' = (lambda - 1) / (lambda alpha): concave for lambda < 1.
    for (const double alpha : {0.1, 1.0, 4.0}) {
        const double h = 1e-4;
        const double second =
            (perspective_g2(alpha + h, lambda) - 2 * perspective_g2(alpha, lambda) + perspective_g2(alpha - h, lambda)) /
            (h * h);
        EXPECT_NEAR(second, (lambda - 1) / (lambda * alpha), 1e-5 / alpha);
    }
    EXPECT_DOUBLE_EQ(perspective_h(0, 0.0, numvec{3.0, 1.0}, lambda), 0.0);
    EXPECT_THROW(perspective_h(0, -1.0, numvec{3.0, 1.0}, lambda), DomainError);
}

TEST(Concise, OptimalMultipliersReproduceTransformedOperator) {
    oracle::Gen g(87);
    const Rmdp r = oracle::example1_rmdp(true);
    const PolyhedralRmdp pm(r);
    const RegularizationConfig cfg = RegularizationConfig::uniform(2, 3, 10.0);
    for (int trial = 0; trial < 10; ++trial) {
        const numvec x = g.vector(2, 1, 1e5);
        ConciseDuals d;
        for (std::size_t s = 0; s < 2; ++s)
            for (std::size_t a = 0; a < 3; ++a) {
                DualInnerResult res = dual_inner_value(x, pm.set(s, a), r.discount());
                d.duals.push_back(res.duals);
                d.tau.push_back(res.value);
            }
        const numvec t = t_tilde(r, cfg, x);
        for (std::size_t s = 0; s < 2; ++s) {
            EXPECT_NEAR(concise_rhs(pm, cfg, x, d, s) / t[s], 1.0, 1e-8);
            EXPECT_GE(concise_rhs_shared(pm, cfg, x, d, s), concise_rhs(pm, cfg, x, d, s) * (1 - 1e-12));
        }
    }
}

// Sharing s' across actions lets the right-hand side grow without bound.
// At state 0, put weight g on the row p_0 <= 0.105 of action 0 and weight g'
// on the row -p_0 <= -0.2375 of action 1 with w_1 g' = 0.8 w_0 g: both
// choices of s' then give a positive multiple of g.
TEST(Concise, SharedFormIsUnbounded) {
    const Rmdp r = oracle::example1_rmdp(true);
    const PolyhedralRmdp pm(r);
    const RegularizationConfig cfg = RegularizationConfig::uniform(2, 3, 10.0);
    const numvec x{5.0, 7.0};
    const double w0 = std::exp(10.0 * r.reward(0, 0)) / 3, w1 = std::exp(10.0 * r.reward(0, 1)) / 3;
    const double t0 = t_tilde(r, cfg, x)[0];
    double previous = -inf;
    for (const double gain : {1.0, 1e3, 1e6, 1e9, 1e12}) {
        ConciseDuals d;
        for (std::size_t k = 0; k < 6; ++k) {
            DualVariables dv;
            dv.gamma.assign(pm.set(k / 3, k % 3).A.rows(), 0.0);
            d.duals.push_back(dv);
            d.tau.push_back(0.0);
        }
        d.duals[0].gamma[0] = gain;               // p_0 <= 0.105 for action 0
        d.duals[1].gamma[2] = 0.8 * w0 * gain / w1;  // -p_0 <= -0.2375 for action 1
        const double shared = concise_rhs_shared(pm, cfg, x, d, 0);
        EXPECT_GT(shared, previous);
        previous = shared;
        EXPECT_LE(concise_rhs(pm, cfg, x, d, 0), t0 * (1 + 1e-12));
    }
    EXPECT_GT(previous, 1e3 * t0);
}

TEST(Concise, ProgramMatchesConvexProgram) {
    const Rmdp r = oracle::example1_rmdp(true);
    const RegularizationConfig cfg = RegularizationConfig::uniform(2, 3, 10.0);
    const ConciseSolution c = solve_concise_program(PolyhedralRmdp(r), cfg);
    const ConvexSolution v = solve_convex_program(r, cfg);
    EXPECT_NEAR(sum(c.x) / sum(v.x), 1.0, 1e-6);
    EXPECT_EQ(c.report.method, "cvx-poly");
}

TEST(Concise, SrectModelsRejected) {
    const Instance inst = load_instance(CRMDP_DATA_DIR "/tiny-srect.json");
    EXPECT_THROW(PolyhedralRmdp{inst.model}, UsageError);
}

#include "crmdp/convex_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "crmdp/errors.hpp"
#include "crmdp/probes.hpp"

namespace crmdp {

void PenaltyOptions::validate() const {
    if (initial_penalty < 0.0 || !(penalty_growth > 1.0) || !(initial_step > 0.0) || !(min_step > 0.0) ||
        max_rounds == 0 || inner_iterations == 0 || !(feasibility_tol > 0.0))
        throw InvalidArgument("penalty options must be positive with growth factor above one");
}

PenaltyResult penalty_ascent(const ConstraintFunction& F, std::size_t n, const PenaltyOptions& opts) {
    opts.validate();
    numvec sigma(n, 1.0);
    prec_t step = opts.initial_step;
    prec_t rho = opts.initial_penalty > 0.0 ? opts.initial_penalty : 10.0 * static_cast<prec_t>(n);
    PenaltyResult out;

    numvec z(n), g(n), best_z(n), floor(n);
    for (std::size_t round = 0; round < opts.max_rounds; ++round) {
        // Rescaled variables z = x / sigma; the objective sum z and per-row
        // penalties (z_s - F_s / sigma_s)_+ share the optimum of the original program.
        std::fill(z.begin(), z.end(), 1.0);
        for (std::size_t s = 0; s < n; ++s) floor[s] = 1.0 / sigma[s];
        prec_t best_val = -inf;
        prec_t best_res = inf;
        numvec x(n);
        for (std::size_t k = 1; k <= opts.inner_iterations; ++k) {
            for (std::size_t s = 0; s < n; ++s) x[s] = sigma[s] * z[s];
            const ConstraintOracle o = F(x);
            ++out.iterations;
            prec_t val = 0.0, res = -inf;
            std::fill(g.begin(), g.end(), 1.0);
            for (std::size_t s = 0; s < n; ++s) {
                const prec_t c = z[s] - o.value[s] / sigma[s];
                val += z[s] - rho * std::max(0.0, c);
                res = std::max(res, c);
                if (c > 0.0) {
                    g[s] -= rho;
                    for (std::size_t j = 0; j < n; ++j) g[j] += rho * o.jacobian(s, j) * sigma[j] / sigma[s];
                }
            }
            if (val > best_val) {
                best_val = val;
                best_res = res;
                best_z = z;
            }
            prec_t gn = 0.0;
            for (prec_t gi : g) gn += gi * gi;
            gn = std::sqrt(gn);
            if (gn == 0.0) break;
            const prec_t h = step / std::sqrt(static_cast<prec_t>(k)) / gn;
            for (std::size_t s = 0; s < n; ++s) z[s] = std::max(floor[s], z[s] + h * g[s]);
        }
        prec_t moved = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            moved = std::max(moved, std::abs(best_z[s] - 1.0));
            sigma[s] *= best_z[s];
        }
        if (best_res > std::max(step, 1e-12)) rho *= opts.penalty_growth;
        step = moved < step ? std::min(opts.initial_step, std::max(step / 2.0, moved))
                            : std::min(opts.initial_step, 2.0 * step);
        out.rounds = round + 1;
        out.penalty = rho;
        if (step < opts.min_step) {
            out.converged = true;
            break;
        }
    }
    for (std::size_t s = 0; s < n; ++s) sigma[s] = std::max(1.0, sigma[s]);
    const ConstraintOracle o = F(sigma);
    prec_t res = 0.0;
    for (std::size_t s = 0; s < n; ++s)
        res = std::max(res, std::max(0.0, sigma[s] - o.value[s]) / std::max(1.0, o.value[s]));
    out.residual = res;
    out.x = std::move(sigma);
    if (out.converged && res > opts.feasibility_tol) out.converged = false;
    return out;
}

Matrix supergradient_t_tilde(const Rmdp& rmdp, const RegularizationConfig& cfg, std::span<const prec_t> x) {
    if (rmdp.rectangularity() != Rectangularity::sa) throw UsageError("supergradient requires sa-rectangular sets");
    const std::size_t S = rmdp.n_states();
    if (x.size() != S) throw InvalidArgument("transformed vector has the wrong dimension");
    numvec logx(S);
    for (std::size_t t = 0; t < S; ++t) {
        if (!(x[t] > 0.0)) throw DomainError("t_tilde needs positive entries");
        logx[t] = std::log(x[t]);
    }
    Matrix J(S, S);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < rmdp.n_actions(); ++a) {
            const InnerResult in = inner_min(rmdp.set(s, a), logx);
            const prec_t e = std::log(cfg.baseline(s, a)) + cfg.b * rmdp.reward(s, a) + rmdp.discount() * in.value;
            if (e > exponent_guard) throw OverflowRisk("t_tilde term exceeds the overflow guard", e);
            const prec_t term = std::exp(e);
            for (std::size_t t = 0; t < S; ++t) J(s, t) += term * rmdp.discount() * in.minimizer[t] / x[t];
        }
    return J;
}

prec_t convex_program_residual(const Rmdp& rmdp, const RegularizationConfig& cfg, std::span<const prec_t> x) {
    const numvec t = t_tilde(rmdp, cfg, x);
    prec_t res = 0.0;
    for (std::size_t s = 0; s < t.size(); ++s) res = std::max(res, std::max(0.0, x[s] - t[s]) / std::max(1.0, t[s]));
    return res;
}

ConvexSolution solve_convex_program(const Rmdp& rmdp, const RegularizationConfig& cfg, const PenaltyOptions& opts) {
    const auto start = std::chrono::steady_clock::now();
    // Fails fast on the guard at the all-ones start.
    (void)t_tilde(rmdp, cfg, numvec(rmdp.n_states(), 1.0));
    const ConstraintFunction F = [&](std::span<const prec_t> x) {
        return ConstraintOracle{t_tilde(rmdp, cfg, x), supergradient_t_tilde(rmdp, cfg, x)};
    };
    PenaltyResult r = penalty_ascent(F, rmdp.n_states(), opts);
    if (!r.converged) throw NonConvergence("convex program did not converge", r.residual);

    ConvexSolution sol;
    sol.x = r.x;
    SolveReport& rep = sol.report;
    rep.method = "cvx";
    rep.value = log_b(r.x, cfg.b);
    rep.policy = robust_greedy_policy(rmdp, rep.value);
    rep.objective = dot(rmdp.base().initial(), rep.value);
    rep.iterations = r.iterations;
    rep.residual = r.residual;
    rep.certificates["penalty"] = r.penalty;
    rep.certificates["rounds"] = static_cast<prec_t>(r.rounds);
    rep.certificates["sum_x"] = sum(r.x);
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return sol;
}

// ---------------------------------------------------------------------------

ContractionCheck contraction_program_check(const VectorOperator& F, const Objective& g,
                                           std::span<const prec_t> v_star, std::size_t samples_per_side,
                                           prec_t spread, unsigned seed, prec_t fixed_point_tol) {
    const numvec vs(v_star.begin(), v_star.end());
    if (max_abs_diff(F(vs), vs) > fixed_point_tol) throw NotFixedPoint("v_star is not a fixed point of the operator");
    const std::size_t n = vs.size();
    const prec_t g_star = g(vs);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<prec_t> unit(0.0, 1.0);

    ContractionCheck out;
    auto record = [&](const numvec& v) {
        const numvec fv = F(v);
        bool above = true, below = true;
        for (std::size_t s = 0; s < n; ++s) {
            const prec_t slack = 1e-12 * std::max(1.0, std::abs(v[s]));
            above = above && v[s] >= fv[s] - slack;
            below = below && v[s] <= fv[s] + slack;
        }
        const prec_t tol = 1e-9 * std::max(1.0, std::abs(g_star));
        const prec_t gv = g(v);
        if (above && out.above_samples < samples_per_side) {
            ++out.above_samples;
            if (gv < g_star - tol) {
                ++out.violations;
                out.worst_margin = std::min(out.worst_margin, gv - g_star);
            }
        } else if (below && out.below_samples < samples_per_side) {
            ++out.below_samples;
            if (gv > g_star + tol) {
                ++out.violations;
                out.worst_margin = std::min(out.worst_margin, g_star - gv);
            }
        }
    };

    // Shifts along e always satisfy the respective inequality for a monotone contraction.
    record(vs);
    for (std::size_t i = 0; i < samples_per_side / 2; ++i) {
        const prec_t c = spread * unit(rng);
        numvec up = vs, down = vs;
        for (std::size_t s = 0; s < n; ++s) {
            up[s] += c;
            down[s] -= c;
        }
        record(up);
        record(down);
    }
    // Random perturbations, filtered by feasibility.
    const std::size_t budget = 200 * samples_per_side;
    for (std::size_t i = 0; i < budget && (out.above_samples < samples_per_side || out.below_samples < samples_per_side);
         ++i) {
        numvec v = vs;
        const prec_t base = spread * (2.0 * unit(rng) - 1.0);
        for (std::size_t s = 0; s < n; ++s) v[s] += base + 0.25 * spread * (2.0 * unit(rng) - 1.0);
        record(v);
    }
    return out;
}

// ---------------------------------------------------------------------------

std::string to_string(ProbeOperator op) {
    switch (op) {
    case ProbeOperator::robust: return "T";
    case ProbeOperator::regularized: return "T-reg";
    case ProbeOperator::t_tilde: return "t-reg";
    case ProbeOperator::t: return "t";
    case ProbeOperator::optimistic: return "T-opt";
    case ProbeOperator::l2_regularized: return "T-l2";
    case ProbeOperator::l2_phi: return "t-l2-phi";
    case ProbeOperator::l2_phi_inverse: return "t-l2-phi-inv";
    case ProbeOperator::kl_transition: return "T-kl";
    case ProbeOperator::kl_transition_exp: return "t-kl";
    }
    return "?";
}

ProbeOperator probe_operator_from_string(const std::string& name) {
    for (ProbeOperator op : {ProbeOperator::robust, ProbeOperator::regularized, ProbeOperator::t_tilde, ProbeOperator::t,
                             ProbeOperator::optimistic, ProbeOperator::l2_regularized, ProbeOperator::l2_phi,
                             ProbeOperator::l2_phi_inverse, ProbeOperator::kl_transition,
                             ProbeOperator::kl_transition_exp})
        if (to_string(op) == name) return op;
    throw UsageError("unknown operator '" + name +
                     "'; expected one of T, T-reg, t-reg, t, T-opt, T-l2, t-l2-phi, t-l2-phi-inv, T-kl, t-kl");
}

bool probe_in_transformed_space(ProbeOperator op) {
    switch (op) {
    case ProbeOperator::t_tilde:
    case ProbeOperator::t:
    case ProbeOperator::l2_phi:
    case ProbeOperator::l2_phi_inverse:
    case ProbeOperator::kl_transition_exp: return true;
    default: return false;
    }
}

numvec probe_domain_point(const ProbeSpec& spec, std::span<const prec_t> v) {
    switch (spec.op) {
    case ProbeOperator::t_tilde:
    case ProbeOperator::t: return exp_b(v, spec.b);
    case ProbeOperator::l2_phi: return phi_b_inverse(v, spec.b);
    case ProbeOperator::l2_phi_inverse: return phi_b(v, spec.b);
    case ProbeOperator::kl_transition_exp: {
        numvec x(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) x[i] = std::exp(-spec.b * v[i]);
        return x;
    }
    default: return numvec(v.begin(), v.end());
    }
}

std::vector<ProbeSample> segment_probe(const Rmdp& rmdp, const ProbeSpec& spec) {
    const std::size_t S = rmdp.n_states();
    if (spec.state >= S) throw DomainError("probe state index out of range");
    if (spec.from.size() != S || spec.to.size() != S) throw DomainError("probe endpoints have the wrong dimension");
    if (spec.samples < 2) throw DomainError("probe needs at least two samples");
    if (!(spec.b > 0.0)) throw DomainError("probe needs a positive b");
    for (const numvec* e : {&spec.from, &spec.to})
        for (prec_t x : *e) {
            if (!std::isfinite(x)) throw DomainError("probe endpoints must be finite");
            if (spec.op == ProbeOperator::t_tilde || spec.op == ProbeOperator::t) {
                if (x < 1.0) throw DomainError("x-space probes need endpoints with x >= 1");
            } else if (probe_in_transformed_space(spec.op) && x <= 0.0) {
                throw DomainError("transformed-space probes need positive endpoints");
            }
        }
    const Policy nu = spec.baseline ? *spec.baseline : Policy::uniform(S, rmdp.n_actions());

    auto eval = [&](const numvec& p) -> prec_t {
        switch (spec.op) {
        case ProbeOperator::robust: return robust_bellman(rmdp, p)[spec.state];
        case ProbeOperator::regularized: return regularized_bellman(rmdp, {nu, spec.b}, p)[spec.state];
        case ProbeOperator::t_tilde: return t_tilde(rmdp, {nu, spec.b}, p)[spec.state];
        case ProbeOperator::t: return t_operator(rmdp, spec.b, p)[spec.state];
        case ProbeOperator::optimistic: return optimistic_bellman(rmdp, p)[spec.state];
        case ProbeOperator::l2_regularized: return l2_regularized_bellman(rmdp, nu, spec.b, p)[spec.state];
        case ProbeOperator::l2_phi: return l2_phi_conjugate(rmdp, nu, spec.b, p)[spec.state];
        case ProbeOperator::l2_phi_inverse: return l2_phi_inverse_conjugate(rmdp, nu, spec.b, p)[spec.state];
        case ProbeOperator::kl_transition: return kl_transition_regularized_bellman(rmdp, spec.b, p)[spec.state];
        case ProbeOperator::kl_transition_exp: {
            numvec v(p.size());
            for (std::size_t i = 0; i < p.size(); ++i) v[i] = -std::log(p[i]) / spec.b;
            return std::exp(-spec.b * kl_transition_regularized_bellman(rmdp, spec.b, v)[spec.state]);
        }
        }
        return 0.0;
    };

    std::vector<ProbeSample> out(spec.samples);
    for (std::size_t i = 0; i < spec.samples; ++i) {
        const prec_t theta = static_cast<prec_t>(i) / static_cast<prec_t>(spec.samples - 1);
        out[i] = {theta, eval(interpolate(spec.from, spec.to, theta))};
        if (!std::isfinite(out[i].value)) throw DomainError("probe produced a non-finite value");
    }
    return out;
}

std::string to_string(Curvature c) {
    switch (c) {
    case Curvature::convex: return "convex";
    case Curvature::concave: return "concave";
    case Curvature::affine: return "affine";
    case Curvature::neither: return "neither";
    }
    return "?";
}

CurvatureReport classify_curvature(const std::vector<ProbeSample>& samples, prec_t tol) {
    if (samples.size() < 3) throw TooFewSamples("curvature classification needs at least three samples");
    CurvatureReport r;
    for (std::size_t i = 1; i + 1 < samples.size(); ++i) {
        const prec_t a = samples[i - 1].value, m = samples[i].value, c = samples[i + 1].value;
        const prec_t scale = std::max({1.0, std::abs(a), std::abs(m), std::abs(c)});
        const prec_t chord = 0.5 * (a + c);
        r.convexity_violation = std::max(r.convexity_violation, (m - chord) / scale);
        r.concavity_violation = std::max(r.concavity_violation, (chord - m) / scale);
    }
    const bool convex = r.convexity_violation <= tol;
    const bool concave = r.concavity_violation <= tol;
    r.verdict = convex && concave ? Curvature::affine
              : convex            ? Curvature::convex
              : concave           ? Curvature::concave
                                  : Curvature::neither;
    return r;
}

} // namespace crmdp

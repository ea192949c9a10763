#include "crmdp/regularized.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crmdp/errors.hpp"

namespace crmdp {

RegularizationConfig::RegularizationConfig(Policy baseline_, prec_t b_) : baseline(std::move(baseline_)), b(b_) {
    if (!(b > 0.0) || !std::isfinite(b)) throw InvalidArgument("inverse temperature b must be positive and finite");
    for (std::size_t s = 0; s < baseline.n_states(); ++s)
        for (std::size_t a = 0; a < baseline.n_actions(); ++a)
            if (!(baseline(s, a) > 0.0)) throw InvalidArgument("baseline policy must be strictly positive");
}

RegularizationConfig RegularizationConfig::uniform(std::size_t n_states, std::size_t n_actions, prec_t b) {
    return RegularizationConfig(Policy::uniform(n_states, n_actions), b);
}

TransformedVector exp_b(std::span<const prec_t> v, prec_t b) {
    TransformedVector x(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const prec_t e = b * v[i];
        if (e > exponent_guard) throw OverflowRisk("exp_b argument exceeds the overflow guard", e);
        x[i] = std::exp(e);
    }
    return x;
}

ValueVector log_b(std::span<const prec_t> x, prec_t b) {
    ValueVector v(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0)) throw DomainError("log_b needs positive entries");
        v[i] = std::log(x[i]) / b;
    }
    return v;
}

namespace {
void check_config(const Rmdp& rmdp, const RegularizationConfig& cfg) {
    if (cfg.baseline.n_states() != rmdp.n_states() || cfg.baseline.n_actions() != rmdp.n_actions())
        throw InvalidArgument("baseline policy does not match the model dimensions");
    if (rmdp.rectangularity() != Rectangularity::sa)
        throw UsageError("operation requires sa-rectangular sets; use t_tilde_srect for joint sets");
}
} // namespace

ValueVector regularized_bellman(const Rmdp& rmdp, const RegularizationConfig& cfg, std::span<const prec_t> v) {
    check_config(rmdp, cfg);
    const Matrix q = robust_q_values(rmdp, v);
    ValueVector out(rmdp.n_states());
    for (std::size_t s = 0; s < rmdp.n_states(); ++s) out[s] = scaled_log_sum_exp(cfg.baseline.row(s), q.row(s), cfg.b);
    return out;
}

numvec log_t_tilde(const Rmdp& rmdp, const RegularizationConfig& cfg, std::span<const prec_t> x) {
    check_config(rmdp, cfg);
    if (x.size() != rmdp.n_states()) throw InvalidArgument("transformed vector has the wrong dimension");
    numvec logx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0)) throw DomainError("t_tilde needs positive entries");
        logx[i] = std::log(x[i]);
    }
    // log t(x)_s = log sum_a nu_sa exp(b r_sa + discount min_p p' log x) = b * Treg(log_b x)_s
    numvec out(rmdp.n_states());
    numvec e(rmdp.n_actions());
    for (std::size_t s = 0; s < rmdp.n_states(); ++s) {
        for (std::size_t a = 0; a < rmdp.n_actions(); ++a)
            e[a] = cfg.b * rmdp.reward(s, a) + rmdp.discount() * inner_min(rmdp.set(s, a), logx).value;
        out[s] = scaled_log_sum_exp(cfg.baseline.row(s), e, 1.0);
    }
    return out;
}

TransformedVector t_tilde(const Rmdp& rmdp, const RegularizationConfig& cfg, std::span<const prec_t> x) {
    numvec l = log_t_tilde(rmdp, cfg, x);
    for (prec_t& y : l) {
        if (y > exponent_guard) throw OverflowRisk("t_tilde value exceeds the overflow guard", y);
        y = std::exp(y);
    }
    return l;
}

ValueResult regularized_fixed_point(const Rmdp& rmdp, const RegularizationConfig& cfg, prec_t tol,
                                    std::size_t max_iterations) {
    if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
    ValueVector v(rmdp.n_states(), 0.0);
    for (std::size_t k = 0; k <= max_iterations; ++k) {
        ValueVector next = regularized_bellman(rmdp, cfg, v);
        const prec_t res = max_abs_diff(v, next);
        if (res <= tol) return {std::move(v), k, res};
        v = std::move(next);
    }
    throw IterationLimit("regularized fixed-point iteration did not reach the tolerance");
}

SandwichMargins sandwich_margins(const Rmdp& rmdp, const RegularizationConfig& cfg, std::span<const prec_t> v) {
    const ValueVector t = robust_bellman(rmdp, v);
    const ValueVector tr = regularized_bellman(rmdp, cfg, v);
    const prec_t width = std::log(static_cast<prec_t>(rmdp.n_actions())) / cfg.b;
    SandwichMargins m{inf, inf};
    for (std::size_t s = 0; s < t.size(); ++s) {
        m.lower = std::min(m.lower, t[s] - tr[s]);
        m.upper = std::min(m.upper, tr[s] + width - t[s]);
    }
    return m;
}

prec_t choose_b(prec_t epsilon, prec_t discount, std::size_t n_actions) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InvalidEpsilon("epsilon must be positive");
    if (!(discount > 0.0 && discount < 1.0)) throw InvalidArgument("discount must lie in (0, 1)");
    if (n_actions == 0) throw InvalidArgument("need at least one action");
    return std::log(static_cast<prec_t>(n_actions)) / (epsilon * (1.0 - discount));
}

std::pair<Rmdp, prec_t> rescale_rewards(const Rmdp& rmdp) {
    const Matrix& r = rmdp.base().rewards();
    const prec_t top = *std::max_element(r.data().begin(), r.data().end());
    if (!(top > 0.0)) return {rmdp, 1.0};
    return {rmdp.with_scaled_rewards(1.0 / top), 1.0 / top};
}

SRectTransformResult t_tilde_srect(const Rmdp& rmdp, const RegularizationConfig& cfg, std::span<const prec_t> x,
                                   prec_t rel_tol, std::size_t max_iterations) {
    if (rmdp.rectangularity() == Rectangularity::sa) {
        return {t_tilde(rmdp, cfg, x), numvec(rmdp.n_states(), 0.0)};
    }
    const std::size_t S = rmdp.n_states();
    const std::size_t A = rmdp.n_actions();
    if (x.size() != S) throw InvalidArgument("transformed vector has the wrong dimension");
    numvec L(S);
    for (std::size_t t = 0; t < S; ++t) {
        if (!(x[t] > 0.0)) throw DomainError("t_tilde needs positive entries");
        L[t] = std::log(x[t]);
    }
    const prec_t lam = rmdp.discount();

    SRectTransformResult out{numvec(S), numvec(S)};
    for (std::size_t s = 0; s < S; ++s) {
        const SRectangularSet& U = rmdp.s_set(s);
        numvec logc(A);
        for (std::size_t a = 0; a < A; ++a) logc[a] = std::log(cfg.baseline(s, a)) + cfg.b * rmdp.reward(s, a);

        // Work with log F(q) = log sum_a exp(logc_a + lam q_a' L), convex along any segment.
        auto exponents = [&](const std::vector<numvec>& q) {
            numvec e(A);
            for (std::size_t a = 0; a < A; ++a) e[a] = logc[a] + lam * dot(q[a], L);
            return e;
        };
        const numvec ones(A, 1.0);
        auto logF = [&](const numvec& e) { return scaled_log_sum_exp(ones, e, 1.0); };

        // Start from the minimizer of the linearization at a uniform weighting.
        Matrix g(A, S);
        for (std::size_t a = 0; a < A; ++a)
            for (std::size_t t = 0; t < S; ++t) g(a, t) = std::exp(logc[a] - *std::max_element(logc.begin(), logc.end())) * L[t];
        std::vector<numvec> q = joint_linear_min(U, g).minimizers;
        prec_t gap = inf;
        for (std::size_t k = 0; k < max_iterations; ++k) {
            const numvec e = exponents(q);
            const numvec w = softmax_weights(ones, e, 1.0);
            for (std::size_t a = 0; a < A; ++a)
                for (std::size_t t = 0; t < S; ++t) g(a, t) = w[a] * lam * L[t];
            const JointResult lmo = joint_linear_min(U, g);
            // Relative gap: (grad F)'(q - s) / F.
            numvec d(A);
            gap = 0.0;
            for (std::size_t a = 0; a < A; ++a) {
                d[a] = lam * (dot(lmo.minimizers[a], L) - dot(q[a], L));
                gap -= w[a] * d[a];
            }
            if (gap <= rel_tol) break;
            // Exact line search: derivative of log F along the segment is increasing in gamma.
            auto slope = [&](prec_t gamma) {
                numvec eg(A);
                for (std::size_t a = 0; a < A; ++a) eg[a] = e[a] + gamma * d[a];
                const numvec wg = softmax_weights(ones, eg, 1.0);
                return dot(wg, d);
            };
            prec_t gamma = 1.0;
            if (slope(1.0) > 0.0) {
                prec_t lo = 0.0, hi = 1.0;
                for (int it = 0; it < 80; ++it) {
                    const prec_t mid = 0.5 * (lo + hi);
                    (slope(mid) > 0.0 ? hi : lo) = mid;
                }
                gamma = 0.5 * (lo + hi);
            }
            for (std::size_t a = 0; a < A; ++a)
                for (std::size_t t = 0; t < S; ++t) q[a][t] += gamma * (lmo.minimizers[a][t] - q[a][t]);
        }
        const prec_t lf = logF(exponents(q));
        if (lf > exponent_guard) throw OverflowRisk("t_tilde value exceeds the overflow guard", lf);
        out.value[s] = std::exp(lf);
        out.gap[s] = gap;
    }
    return out;
}

} // namespace crmdp

#include "crmdp/probes.hpp"

#include <algorithm>
#include <cmath>

#include "crmdp/errors.hpp"

namespace crmdp {

numvec t_operator(const Rmdp& rmdp, prec_t b, std::span<const prec_t> x) {
    if (!(b > 0.0)) throw InvalidArgument("b must be positive");
    if (x.size() != rmdp.n_states()) throw InvalidArgument("transformed vector has the wrong dimension");
    numvec logx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0)) throw DomainError("t needs positive entries");
        logx[i] = std::log(x[i]);
    }
    // log t(x)_s = max_a b r_sa + discount min_p p' log x
    numvec out(rmdp.n_states(), -inf);
    for (std::size_t s = 0; s < rmdp.n_states(); ++s)
        for (std::size_t a = 0; a < rmdp.n_actions(); ++a)
            out[s] = std::max(out[s], b * rmdp.reward(s, a) + rmdp.discount() * inner_min(rmdp.set(s, a), logx).value);
    for (prec_t& y : out) {
        if (y > exponent_guard) throw OverflowRisk("t value exceeds the overflow guard", y);
        y = std::exp(y);
    }
    return out;
}

ValueVector l2_regularized_bellman(const Rmdp& rmdp, const Policy& nu, prec_t b, std::span<const prec_t> v) {
    if (!(b > 0.0)) throw InvalidArgument("b must be positive");
    if (nu.n_states() != rmdp.n_states() || nu.n_actions() != rmdp.n_actions())
        throw InvalidArgument("baseline policy does not match the model dimensions");
    const Matrix y = robust_q_values(rmdp, v);
    const std::size_t A = rmdp.n_actions();
    ValueVector out(rmdp.n_states());
    numvec w(A);
    for (std::size_t s = 0; s < rmdp.n_states(); ++s) {
        for (std::size_t a = 0; a < A; ++a) w[a] = nu(s, a) + b * y(s, a);
        // The maximizer is the projection of w; evaluating the objective there
        // equals the closed form but avoids cancelling large squared norms.
        const numvec pi = project_simplex(w);
        prec_t dist = 0.0;
        for (std::size_t a = 0; a < A; ++a) dist += (pi[a] - nu(s, a)) * (pi[a] - nu(s, a));
        out[s] = dot(pi, y.row(s)) - dist / (2.0 * b);
    }
    return out;
}

numvec phi_b(std::span<const prec_t> v, prec_t b) {
    numvec w(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] < 0.0) throw DomainError("phi_b is defined on the nonnegative orthant");
        w[i] = (b * v[i]) * (b * v[i]);
    }
    return w;
}

numvec phi_b_inverse(std::span<const prec_t> w, prec_t b) {
    numvec v(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] < 0.0) throw DomainError("phi_b inverse is defined on the nonnegative orthant");
        v[i] = std::sqrt(w[i]) / b;
    }
    return v;
}

numvec l2_phi_conjugate(const Rmdp& rmdp, const Policy& nu, prec_t b, std::span<const prec_t> z) {
    return phi_b_inverse(l2_regularized_bellman(rmdp, nu, b, phi_b(z, b)), b);
}

numvec l2_phi_inverse_conjugate(const Rmdp& rmdp, const Policy& nu, prec_t b, std::span<const prec_t> w) {
    return phi_b(l2_regularized_bellman(rmdp, nu, b, phi_b_inverse(w, b)), b);
}

prec_t kl_transition_dual_objective(std::span<const prec_t> v, const Polyhedral& set, std::span<const prec_t> nominal,
                                    prec_t b, std::span<const prec_t> y) {
    const numvec aty = set.A.multiply_transposed(y);
    numvec e(v.size());
    for (std::size_t s = 0; s < v.size(); ++s) e[s] = -(v[s] + aty[s]);
    // -(1/b) log sum mu exp(-b z) = -scaled_log_sum_exp(mu, -z, b)
    return -dot(set.c, y) - scaled_log_sum_exp(nominal, e, b);
}

KlInnerResult kl_transition_inner(std::span<const prec_t> v, const UncertaintySet& set,
                                  std::span<const prec_t> nominal, prec_t b, prec_t tol,
                                  std::size_t max_iterations) {
    if (!(b > 0.0)) throw InvalidArgument("b must be positive");
    if (v.size() != set.n_states() || nominal.size() != v.size())
        throw InvalidArgument("kl_transition_inner: dimension mismatch");
    for (prec_t p : nominal)
        if (!(p > 0.0)) throw InvalidArgument("nominal distribution must be strictly positive");
    if (!is_simplex_point(nominal)) throw InvalidArgument("nominal is not a distribution");

    if (const auto* single = std::get_if<Singleton>(&set.data())) {
        const numvec& p = single->nominal;
        return {dot(p, v) + kl_divergence(p, nominal) / b, {}, p, 0};
    }
    const UncertaintySet poly = box_as_polyhedral(set);
    const Polyhedral& P = std::get<Polyhedral>(poly.data());
    const std::size_t m = P.A.rows();

    auto primal_of = [&](const numvec& y) {
        const numvec aty = P.A.multiply_transposed(y);
        numvec e(v.size());
        for (std::size_t s = 0; s < v.size(); ++s) e[s] = -(v[s] + aty[s]);
        return softmax_weights(nominal, e, b);
    };
    auto objective = [&](const numvec& y) { return kl_transition_dual_objective(v, P, nominal, b, y); };

    prec_t anorm = 0.0;
    for (prec_t a : P.A.data()) anorm += a * a;
    // The dual gradient is Lipschitz with constant at most b ||A||_F^2, so this
    // step always ascends and backtracking never goes below it.
    const prec_t safe_step = 1.0 / (b * std::max(anorm, 1e-12));
    prec_t step = safe_step;
    const prec_t scale = std::max(1.0, norm_inf(P.c));

    numvec y(m, 0.0);
    prec_t fy = objective(y);
    numvec grad(m), next(m);
    for (std::size_t k = 0; k < max_iterations; ++k) {
        // Gradient: -c + A q(y)
        const numvec q = primal_of(y);
        const numvec aq = P.A.multiply(q);
        for (std::size_t i = 0; i < m; ++i) grad[i] = aq[i] - P.c[i];

        prec_t gmap = 0.0;
        for (std::size_t i = 0; i < m; ++i) gmap = std::max(gmap, std::abs(std::max(0.0, y[i] + grad[i]) - y[i]));
        if (gmap <= tol * scale) return {fy, y, q, k};

        for (int bt = 0; bt < 60; ++bt) {
            prec_t lin = 0.0, quad = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                next[i] = std::max(0.0, y[i] + step * grad[i]);
                const prec_t d = next[i] - y[i];
                lin += grad[i] * d;
                quad += d * d;
            }
            const prec_t fn = objective(next);
            if (step <= safe_step || fn >= fy + lin - quad / (2.0 * step) - 1e-15 * std::abs(fy)) {
                y = next;
                fy = fn;
                step *= 1.5;
                break;
            }
            step = std::max(0.5 * step, safe_step);
        }
    }
    throw NonConvergence("KL transition dual did not converge", fy);
}

ValueVector kl_transition_regularized_bellman(const Rmdp& rmdp, prec_t b, std::span<const prec_t> v, prec_t tol) {
    if (v.size() != rmdp.n_states()) throw InvalidArgument("value vector has the wrong dimension");
    ValueVector out(rmdp.n_states(), -inf);
    for (std::size_t s = 0; s < rmdp.n_states(); ++s)
        for (std::size_t a = 0; a < rmdp.n_actions(); ++a) {
            const prec_t inner = kl_transition_inner(v, rmdp.set(s, a), rmdp.base().transition(s, a), b, tol).value;
            out[s] = std::max(out[s], rmdp.reward(s, a) + rmdp.discount() * inner);
        }
    return out;
}

} // namespace crmdp

#include "crmdp/polyhedral_dual.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "crmdp/errors.hpp"

namespace crmdp {

PolyhedralRmdp::PolyhedralRmdp(const Rmdp& rmdp) : rmdp_(rmdp.as_polyhedral()) {}

const Polyhedral& PolyhedralRmdp::set(std::size_t s, std::size_t a) const {
    return std::get<Polyhedral>(rmdp_.set(s, a).data());
}

namespace {
// a log a with 0 log 0 = 0
prec_t xlogx(prec_t a) { return a > 0.0 ? a * std::log(a) : 0.0; }

numvec log_vector(std::span<const prec_t> x) {
    numvec l(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0)) throw DomainError("x must be positive");
        l[i] = std::log(x[i]);
    }
    return l;
}
} // namespace

prec_t conjugate_f(std::span<const prec_t> x, std::span<const prec_t> y, prec_t discount) {
    if (x.size() != y.size()) throw InvalidArgument("conjugate_f: dimension mismatch");
    const numvec L = log_vector(x);
    const prec_t ll = dot(L, L);
    if (ll == 0.0) return norm_inf(y) <= 1e-9 ? -1.0 : inf;
    prec_t alpha = dot(y, L) / ll;
    numvec r(y.begin(), y.end());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= alpha * L[i];
    if (norm_inf(r) > 1e-9) return inf;
    if (alpha < -1e-12) return inf;
    alpha = std::max(0.0, alpha);
    const prec_t q = alpha / discount;
    return xlogx(q) - q;
}

prec_t dual_objective(std::span<const prec_t> x, const Polyhedral& set, prec_t discount, std::span<const prec_t> gamma,
                      prec_t alpha) {
    const numvec L = log_vector(x);
    const numvec atg = set.A.multiply_transposed(gamma);
    prec_t inner = inf;
    for (std::size_t t = 0; t < L.size(); ++t) inner = std::min(inner, alpha * L[t] + atg[t]);
    const prec_t q = alpha / discount;
    return -dot(set.c, gamma) + inner - xlogx(q) + q;
}

prec_t dual_objective_with_multipliers(std::span<const prec_t> x, const Polyhedral& set, prec_t discount,
                                       const DualVariables& d) {
    const numvec atg = set.A.multiply_transposed(d.gamma);
    numvec arg(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) arg[t] = -atg[t] + d.mu[t] + d.theta;
    return -dot(set.c, d.gamma) + d.theta - conjugate_f(x, arg, discount);
}

namespace {

DualVariables complete_multipliers(const numvec& L, const Polyhedral& set, numvec gamma, prec_t alpha) {
    DualVariables d;
    const numvec atg = set.A.multiply_transposed(gamma);
    d.theta = inf;
    for (std::size_t t = 0; t < L.size(); ++t) d.theta = std::min(d.theta, alpha * L[t] + atg[t]);
    d.mu.resize(L.size());
    for (std::size_t t = 0; t < L.size(); ++t) d.mu[t] = alpha * L[t] + atg[t] - d.theta;
    d.gamma = std::move(gamma);
    d.alpha = alpha;
    return d;
}

// max -c'g + th  s.t.  th - [A'g]_s' <= L_s', g >= 0: the LP dual of min p'L over the set.
std::pair<numvec, prec_t> lp_dual_multipliers(const numvec& L, const Polyhedral& set) {
    const std::size_t m = set.A.rows();
    const std::size_t S = L.size();
    LinearProgram lp = LinearProgram::nonnegative(m + 1, Sense::maximize);
    for (std::size_t i = 0; i < m; ++i) lp.cost[i] = -set.c[i];
    lp.cost[m] = 1.0;
    lp.lower[m] = -inf;
    numvec row(m + 1);
    for (std::size_t t = 0; t < S; ++t) {
        for (std::size_t i = 0; i < m; ++i) row[i] = -set.A(i, t);
        row[m] = 1.0;
        lp.add_inequality(row, L[t]);
    }
    const LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::optimal) throw EmptySet("dual of the inner LP has no optimum; set may be empty");
    numvec g(sol.point.begin(), sol.point.begin() + static_cast<long>(m));
    for (prec_t& v : g) v = std::max(0.0, v);
    return {g, sol.value};
}

} // namespace

DualInnerResult dual_inner_value(std::span<const prec_t> x, const Polyhedral& set, prec_t discount, prec_t tol,
                                 DualMethod method, std::size_t max_iterations) {
    for (prec_t xi : x)
        if (xi < 1.0 - 1e-12) throw DomainError("dual_inner_value needs x >= 1");
    const numvec L = log_vector(x);
    LinearProgram primal = polyhedral_lp(set.A, set.c, 1, L.size());
    primal.cost = L;
    const LpSolution ps = solve_lp(primal);
    if (ps.status != LpStatus::optimal) throw EmptySet("polyhedral set is empty");
    const prec_t u = ps.value;
    DualInnerResult out;
    out.primal_value = std::exp(discount * u);

    if (method == DualMethod::homogeneous_lp) {
        // The objective is positively homogeneous in (gamma, alpha) apart from the
        // entropy term, so gamma = alpha g with g from the LP dual and alpha chosen
        // by the first-order condition u = log(alpha / l) / l.
        auto [g, lp_value] = lp_dual_multipliers(L, set);
        const prec_t alpha = discount * std::exp(discount * lp_value);
        for (prec_t& v : g) v *= alpha;
        out.duals = complete_multipliers(L, set, std::move(g), alpha);
        out.value = dual_objective(x, set, discount, out.duals.gamma, alpha);
        return out;
    }

    // With gamma = alpha g the objective is alpha phi(g) - (alpha/l) log(alpha/l) + alpha/l,
    // phi(g) = -c'g + min_s' (log x + A'g), and its maximum over alpha is exp(l phi(g)).
    // phi is polyhedral, so projected supergradient ascent with Polyak steps aimed
    // at the LP value u converges linearly.
    const std::size_t m = set.A.rows();
    const std::size_t S = L.size();
    auto phi = [&](const numvec& g, std::size_t* arg_out) {
        const numvec atg = set.A.multiply_transposed(g);
        std::size_t arg = 0;
        for (std::size_t t = 1; t < S; ++t)
            if (L[t] + atg[t] < L[arg] + atg[arg]) arg = t;
        if (arg_out) *arg_out = arg;
        return -dot(set.c, g) + L[arg] + atg[arg];
    };
    numvec g(m, 0.0), best_g = g, step_dir(m);
    prec_t best_phi = phi(g, nullptr);
    auto gap_of = [&](prec_t ph) { return out.primal_value - std::exp(discount * ph); };
    for (std::size_t k = 0; k < max_iterations && gap_of(best_phi) > tol; ++k) {
        std::size_t arg = 0;
        const prec_t cur = phi(g, &arg);
        for (std::size_t i = 0; i < m; ++i) step_dir[i] = -set.c[i] + set.A(i, arg);
        const prec_t norm2 = dot(step_dir, step_dir);
        if (norm2 == 0.0) break;
        const prec_t h = std::max(u - cur, 0.0) / norm2;
        for (std::size_t i = 0; i < m; ++i) g[i] = std::max(0.0, g[i] + h * step_dir[i]);
        const prec_t val = phi(g, nullptr);
        out.iterations = k + 1;
        if (val > best_phi) {
            best_phi = val;
            best_g = g;
        }
    }
    const prec_t best_alpha = discount * std::exp(discount * best_phi);
    numvec best_gamma = best_g;
    for (prec_t& v : best_gamma) v *= best_alpha;
    const prec_t best = dual_objective(x, set, discount, best_gamma, best_alpha);
    if (out.primal_value - best > tol)
        throw NonConvergence("dual supergradient ascent missed the tolerance", out.primal_value - best);
    out.duals = complete_multipliers(L, set, best_gamma, best_alpha);
    out.value = best;
    return out;
}

prec_t perspective_g1(std::size_t s_prime, prec_t alpha, std::span<const prec_t> x) {
    if (alpha < 0.0) throw DomainError("alpha must be nonnegative");
    if (alpha == 0.0) return 0.0;
    return alpha * std::log(x[s_prime] / alpha);
}

prec_t perspective_g2(prec_t alpha, prec_t discount) {
    if (alpha < 0.0) throw DomainError("alpha must be nonnegative");
    return xlogx(alpha) - xlogx(alpha / discount);
}

prec_t perspective_h(std::size_t s_prime, prec_t alpha, std::span<const prec_t> x, prec_t discount) {
    if (alpha < 0.0) throw DomainError("alpha must be nonnegative");
    if (s_prime >= x.size() || !(x[s_prime] > 0.0)) throw DomainError("x_s' must be positive");
    return alpha * std::log(x[s_prime]) - xlogx(alpha / discount);
}

namespace {
// -c'gamma + h_s'(alpha, x) + [A'gamma]_s' + alpha / l for every s'.
numvec constraint_terms(const Polyhedral& P, std::span<const prec_t> x, prec_t discount, const DualVariables& d) {
    const numvec atg = P.A.multiply_transposed(d.gamma);
    const prec_t cg = dot(P.c, d.gamma);
    numvec out(x.size());
    for (std::size_t t = 0; t < x.size(); ++t)
        out[t] = -cg + perspective_h(t, d.alpha, x, discount) + atg[t] + d.alpha / discount;
    return out;
}

prec_t weight(const Rmdp& m, const RegularizationConfig& cfg, std::size_t s, std::size_t a) {
    const prec_t e = cfg.b * m.reward(s, a);
    if (e > exponent_guard) throw OverflowRisk("exp_b(r) exceeds the overflow guard", e);
    return cfg.baseline(s, a) * std::exp(e);
}
} // namespace

prec_t concise_rhs(const PolyhedralRmdp& prmdp, const RegularizationConfig& cfg, std::span<const prec_t> x,
                   const ConciseDuals& d, std::size_t s) {
    const Rmdp& m = prmdp.model();
    prec_t total = 0.0;
    for (std::size_t a = 0; a < m.n_actions(); ++a) {
        const numvec terms = constraint_terms(prmdp.set(s, a), x, m.discount(), d.duals[s * m.n_actions() + a]);
        total += weight(m, cfg, s, a) * *std::min_element(terms.begin(), terms.end());
    }
    return total;
}

prec_t concise_rhs_shared(const PolyhedralRmdp& prmdp, const RegularizationConfig& cfg, std::span<const prec_t> x,
                          const ConciseDuals& d, std::size_t s) {
    const Rmdp& m = prmdp.model();
    numvec total(x.size(), 0.0);
    for (std::size_t a = 0; a < m.n_actions(); ++a) {
        const numvec terms = constraint_terms(prmdp.set(s, a), x, m.discount(), d.duals[s * m.n_actions() + a]);
        const prec_t w = weight(m, cfg, s, a);
        for (std::size_t t = 0; t < x.size(); ++t) total[t] += w * terms[t];
    }
    return *std::min_element(total.begin(), total.end());
}

ConciseSolution solve_concise_program(const PolyhedralRmdp& prmdp, const RegularizationConfig& cfg,
                                      const PenaltyOptions& opts) {
    const auto start = std::chrono::steady_clock::now();
    const Rmdp& m = prmdp.model();
    const std::size_t S = m.n_states();
    const std::size_t A = m.n_actions();

    // For fixed x the best multipliers give tau_sa = max over (gamma, alpha) of the
    // dual objective, so the constraint x_s <= sum_a w_sa tau_sa is evaluated
    // through dual_inner_value. Supergradients in x come from the primal minimizer.
    auto solve_duals = [&](std::span<const prec_t> x) {
        ConciseDuals d;
        d.duals.reserve(S * A);
        d.tau.reserve(S * A);
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a) {
                DualInnerResult r = dual_inner_value(x, prmdp.set(s, a), m.discount());
                d.tau.push_back(r.value);
                d.duals.push_back(std::move(r.duals));
            }
        return d;
    };
    const ConstraintFunction F = [&](std::span<const prec_t> x) {
        const ConciseDuals d = solve_duals(x);
        ConstraintOracle o{numvec(S, 0.0), Matrix(S, S)};
        const numvec L = log_vector(x);
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a) {
                const prec_t w = weight(m, cfg, s, a);
                const prec_t tau = d.tau[s * A + a];
                o.value[s] += w * tau;
                const InnerResult in = inner_min(m.set(s, a), L);
                for (std::size_t t = 0; t < S; ++t) o.jacobian(s, t) += w * tau * m.discount() * in.minimizer[t] / x[t];
            }
        return o;
    };
    (void)F(numvec(S, 1.0));
    PenaltyResult r = penalty_ascent(F, S, opts);
    if (!r.converged) throw NonConvergence("concise program did not converge", r.residual);

    ConciseSolution sol;
    sol.x = r.x;
    sol.duals = solve_duals(r.x);
    SolveReport& rep = sol.report;
    rep.method = "cvx-poly";
    rep.value = log_b(r.x, cfg.b);
    rep.policy = robust_greedy_policy(m, rep.value);
    rep.objective = dot(m.base().initial(), rep.value);
    rep.iterations = r.iterations;
    rep.residual = r.residual;
    rep.certificates["penalty"] = r.penalty;
    rep.certificates["rounds"] = static_cast<prec_t>(r.rounds);
    rep.certificates["sum_x"] = sum(r.x);
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return sol;
}

} // namespace crmdp

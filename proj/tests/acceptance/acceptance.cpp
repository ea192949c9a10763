// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "crmdp/commands.hpp"
#include "crmdp/errors.hpp"
#include "crmdp/instance.hpp"
#include "crmdp/polyhedral_dual.hpp"
#include "crmdp/probes.hpp"
#include "oracles.hpp"

using namespace crmdp;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    // Records a failed condition; the first few messages are kept.
    void require(bool ok, const std::string& what) {
        if (ok) return;
        pass = false;
        if (detail.size() < 400) detail += (detail.empty() ? "" : "; ") + what;
    }
};

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

CurvatureReport probe(const Rmdp& r, ProbeOperator op, std::size_t s, double b) {
    ProbeSpec spec;
    spec.op = op;
    spec.state = s;
    spec.b = b;
    spec.samples = 201;
    spec.from = probe_domain_point(spec, oracle::example1_v1());
    spec.to = probe_domain_point(spec, oracle::example1_v2());
    return classify_curvature(segment_probe(r, spec));
}

std::string describe(const CurvatureReport& c) {
    return to_string(c.verdict) + " (convexity " + num(c.convexity_violation) + ", concavity " +
           num(c.concavity_violation) + ")";
}

bool strictly_neither(const CurvatureReport& c) {
    return c.verdict == Curvature::neither && c.convexity_violation > 1e-6 && c.concavity_violation > 1e-6;
}

// ---------------------------------------------------------------------------

Outcome robust_operator_is_neither() {
    Outcome o;
    const CurvatureReport c = probe(oracle::example1_rmdp(), ProbeOperator::robust, 0, 1.0);
    o.require(strictly_neither(c), "T probe " + describe(c));
    if (o.pass) o.detail = describe(c);
    return o;
}

Outcome regularized_operator_is_neither() {
    Outcome o;
    for (const double b : {5.0, 10.0}) {
        const CurvatureReport c = probe(oracle::example1_rmdp(), ProbeOperator::regularized, 0, b);
        o.require(c.verdict == Curvature::neither, "b=" + num(b) + ": " + describe(c));
    }
    return o;
}

Outcome transformed_operator_is_concave() {
    Outcome o;
    const Rmdp r = oracle::example1_rmdp();
    oracle::Gen g(3);
    for (const double b : {5.0, 10.0}) {
        const CurvatureReport c = probe(r, ProbeOperator::t_tilde, 0, b);
        o.require(c.verdict == Curvature::concave, "b=" + num(b) + " probe " + describe(c));

        const RegularizationConfig cfg = RegularizationConfig::uniform(2, 3, b);
        std::size_t violations = 0;
        for (int k = 0; k < 1000; ++k) {
            const numvec x1 = exp_b(g.vector(2, 0.0, 10.5), b);
            const numvec x2 = exp_b(g.vector(2, 0.0, 10.5), b);
            const numvec mid = interpolate(x1, x2, 0.5);
            const numvec f1 = t_tilde(r, cfg, x1), f2 = t_tilde(r, cfg, x2), fm = t_tilde(r, cfg, mid);
            for (std::size_t s = 0; s < 2; ++s) {
                const double chord = 0.5 * (f1[s] + f2[s]);
                const double scale = std::max({1.0, f1[s], f2[s], fm[s]});
                if (fm[s] < chord - 1e-9 * scale) ++violations;
            }
        }
        o.require(violations == 0, "b=" + num(b) + ": " + std::to_string(violations) + " midpoint violations");
    }
    return o;
}

Outcome sandwich_holds() {
    Outcome o;
    const Rmdp r = oracle::example1_rmdp();
    const RegularizationConfig cfg = RegularizationConfig::uniform(2, 3, 5.0);
    const double width = std::log(3.0) / 5.0;
    oracle::Gen g(4);
    double lo = inf, hi = -inf;
    for (int k = 0; k < 100; ++k) {
        const numvec v = g.vector(2, 0.0, 60.0);
        const numvec T = robust_bellman(r, v), R = regularized_bellman(r, cfg, v);
        for (std::size_t s = 0; s < 2; ++s) {
            lo = std::min(lo, T[s] - R[s]);
            hi = std::max(hi, T[s] - R[s]);
        }
    }
    // A tie among all actions makes both sides equal up to rounding.
    o.require(lo >= -1e-12, "T - Treg down to " + num(lo));
    o.require(hi <= width + 1e-9, "T - Treg up to " + num(hi));
    o.detail = o.pass ? "gap in [" + num(lo) + ", " + num(hi) + "], bound " + num(width) : o.detail;
    return o;
}

Outcome epsilon_bound_holds() {
    Outcome o;
    const Instance inst = load_instance(CRMDP_DATA_DIR "/example1-rescaled.json");
    const double b = choose_b(0.05, 0.8, 3);
    o.require(std::abs(b - 109.861) < 1e-3, "choose_b = " + num(b));
    o.require(inst.regularization && std::abs(inst.regularization->b - b) < 1e-12, "instance b differs from choose_b");
    const numvec v = robust_value_iteration(inst.model, 1e-10).value;
    const numvec vt = regularized_fixed_point(inst.model, RegularizationConfig::uniform(2, 3, b), 1e-10).value;
    const double gap = max_abs_diff(v, vt);
    o.require(gap <= 0.05, "gap " + num(gap));
    for (std::size_t s = 0; s < 2; ++s) o.require(vt[s] <= v[s] + 1e-9, "regularized value above robust value");
    if (o.pass) o.detail = "gap " + num(gap) + " at b = " + num(b);
    return o;
}

Outcome convex_program_matches_fixed_point() {
    Outcome o;
    const Rmdp r = oracle::example1_rmdp(true);
    const RegularizationConfig cfg = RegularizationConfig::uniform(2, 3, 10.0);
    const ConvexSolution sol = solve_convex_program(r, cfg);
    const numvec target = exp_b(regularized_fixed_point(r, cfg, 1e-13).value, 10.0);
    const double rel = max_abs_diff(sol.x, target) / norm_inf(target);
    const double residual = convex_program_residual(r, cfg, sol.x);
    o.require(rel <= 1e-4, "relative error " + num(rel));
    o.require(residual <= 1e-6, "residual " + num(residual));
    if (o.pass) o.detail = "relative error " + num(rel) + ", residual " + num(residual);
    return o;
}

Outcome concise_program_matches_convex_program() {
    Outcome o;
    const Rmdp r = oracle::example1_rmdp(true);
    const RegularizationConfig cfg = RegularizationConfig::uniform(2, 3, 10.0);
    const double convex = sum(solve_convex_program(r, cfg).x);
    const double concise = sum(solve_concise_program(PolyhedralRmdp(r.as_polyhedral()), cfg).x);
    const double rel = std::abs(concise - convex) / convex;
    o.require(rel <= 1e-3, "relative difference " + num(rel));
    if (o.pass) o.detail = "relative difference " + num(rel);
    return o;
}

Outcome strong_duality() {
    Outcome o;
    const PolyhedralRmdp pm(oracle::example1_rmdp());
    const double lambda = 0.8;
    oracle::Gen g(8);
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
        const numvec x = g.vector(2, 1.0, 1e3);
        const numvec L{std::log(x[0]), std::log(x[1])};
        const Polyhedral& P = pm.set(g.index(2), g.index(3));
        // A linear function on a segment is minimized at an end, so the two-point grid is exact.
        const double lp_min = oracle::grid_min_feasible(2, P.A, P.c, [&](const numvec& p) { return dot(p, L); });
        const double expect = std::exp(lambda * lp_min);
        const double got = dual_inner_value(x, P, lambda).value;
        worst = std::max(worst, std::abs(got - expect) / expect);
    }
    o.require(worst <= 1e-6, "relative disagreement " + num(worst));
    if (o.pass) o.detail = "worst relative disagreement " + num(worst);
    return o;
}

Outcome conjugate_closed_form() {
    Outcome o;
    const double lambda = 0.8;
    const numvec x{3.0, 1.5};
    const numvec L{std::log(3.0), std::log(1.5)};
    oracle::Gen g(9);
    for (const double alpha : {0.0, lambda, 2 * lambda}) {
        const numvec y{alpha * L[0], alpha * L[1]};
        const double q = alpha / lambda;
        const double closed = (q > 0 ? q * std::log(q) : 0.0) - q;
        const double got = conjugate_f(x, y, lambda);
        o.require(std::abs(got - closed) <= 1e-12, "alpha=" + num(alpha) + ": " + num(got) + " vs " + num(closed));
        double sup = -inf;
        for (int k = 0; k < 20000; ++k) {
            const numvec p = g.vector(2, -10, 10);
            sup = std::max(sup, dot(p, y) - std::exp(lambda * dot(p, L)));
        }
        o.require(sup <= got + 1e-7, "sampled supremum " + num(sup) + " exceeds " + num(got));
    }
    o.require(conjugate_f(x, numvec{1.0, 0.0}, lambda) == inf, "off-ray point is finite");
    o.require(conjugate_f(x, numvec{-L[0], -L[1]}, lambda) == inf, "negative ray is finite");
    return o;
}

Outcome log_sum_exp_is_kl_conjugate() {
    Outcome o;
    oracle::Gen g(10);
    for (int k = 0; k < 20; ++k) {
        const std::size_t n = 2 + g.index(4);
        const numvec w = g.interior_simplex(n, 0.01);
        const numvec y = g.vector(n, -5, 5);
        const double b = g.uniform(0.1, 10);
        const double value = scaled_log_sum_exp(w, y, b);
        const auto objective = [&](const numvec& q) { return dot(q, y) - kl_divergence(q, w) / b; };
        double sup = -inf;
        for (int j = 0; j < 10000; ++j) sup = std::max(sup, objective(g.simplex(n)));
        o.require(sup <= value + 1e-9, "sampled supremum above the log-sum-exp value");
        const double attained = objective(softmax_weights(w, y, b));
        o.require(std::abs(attained - value) <= 1e-9, "maximizer attains " + num(attained) + " vs " + num(value));
    }
    return o;
}

Outcome mdp_lp_duality() {
    Outcome o;
    const Mdp m = oracle::example1_mdp();
    const LpSolution primal = solve_lp(build_primal_lp(m));
    const LpSolution dual = solve_lp(build_dual_lp(m));
    const double vi = dot(m.initial(), value_iteration(m, 1e-10).value);
    o.require(primal.status == LpStatus::optimal && dual.status == LpStatus::optimal, "LP not optimal");
    o.require(std::abs(primal.value - dual.value) <= 1e-8, "primal " + num(primal.value) + " dual " + num(dual.value));
    o.require(std::abs(primal.value - vi) <= 1e-8, "primal " + num(primal.value) + " vs value iteration " + num(vi));
    o.require(std::abs(sum(dual.point) - 5.0) <= 1e-8, "occupancy mass " + num(sum(dual.point)));
    if (o.pass) o.detail = "value " + num(primal.value);
    return o;
}

Outcome fixed_points_solve_programs() {
    Outcome o;
    const Rmdp r = oracle::example1_rmdp();
    const Mdp& m = r.base();
    const RegularizationConfig cfg = RegularizationConfig::uniform(2, 3, 5.0);
    struct Case {
        std::string name;
        VectorOperator F;
        numvec fixed;
    };
    const std::vector<Case> cases{
        {"T_P", [&](std::span<const prec_t> v) { return bellman(m, v); }, value_iteration(m, 1e-13).value},
        {"T", [&](std::span<const prec_t> v) { return robust_bellman(r, v); },
         robust_value_iteration(r, 1e-13).value},
        {"Treg", [&](std::span<const prec_t> v) { return regularized_bellman(r, cfg, v); },
         regularized_fixed_point(r, cfg, 1e-13).value},
    };
    const std::vector<std::pair<std::string, Objective>> objectives{
        {"alpha'v", [&](std::span<const prec_t> v) { return dot(m.initial(), v); }},
        {"sum exp_b", [&](std::span<const prec_t> v) { return sum(exp_b(v, 5.0)); }},
    };
    for (const auto& c : cases)
        for (const auto& [gname, g] : objectives) {
            const ContractionCheck k = contraction_program_check(c.F, g, c.fixed, 100, 5.0, 12);
            o.require(k.violations == 0, c.name + "/" + gname + ": " + std::to_string(k.violations) + " violations");
            o.require(k.above_samples >= 100 && k.below_samples >= 100, c.name + "/" + gname + ": too few samples");
        }
    return o;
}

Outcome methods_agree() {
    Outcome o;
    const Rmdp r = oracle::example1_rmdp();
    const numvec vi = robust_value_iteration(r, 1e-10).value;
    const PolicyResult pi = robust_policy_iteration(r, 1e-10);
    const numvec pe = robust_policy_evaluation(r, robust_greedy_policy(r, vi), 1e-10);
    const double d1 = max_abs_diff(vi, pi.value), d2 = max_abs_diff(vi, pe);
    o.require(d1 <= 1e-6, "rvi vs rpi " + num(d1));
    o.require(d2 <= 1e-6, "rvi vs greedy evaluation " + num(d2));
    if (o.pass) o.detail = "max difference " + num(std::max(d1, d2));
    return o;
}

Outcome alternative_operator_probes() {
    Outcome o;
    const Rmdp r = oracle::example1_rmdp();
    const struct {
        const char* name;
        ProbeOperator op;
        double b;
    } probes[] = {
        {"t b=0.01", ProbeOperator::t, 0.01},
        {"l2 T b=10", ProbeOperator::l2_regularized, 10.0},
        {"phi-conjugate b=10", ProbeOperator::l2_phi, 10.0},
        {"inverse phi-conjugate b=0.1", ProbeOperator::l2_phi_inverse, 0.1},
    };
    for (const auto& p : probes) {
        const CurvatureReport c = probe(r, p.op, 0, p.b);
        o.require(c.verdict == Curvature::neither, std::string(p.name) + ": " + describe(c));
    }

    const Instance kl = load_instance(CRMDP_DATA_DIR "/tiny-kl.json");
    oracle::Gen g(14);
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
        const numvec v = g.vector(2, -3, 3);
        const double b = g.uniform(0.5, 10);
        for (std::size_t s = 0; s < 2; ++s)
            for (std::size_t a = 0; a < 2; ++a) {
                const auto& P = std::get<Polyhedral>(kl.model.set(s, a).data());
                const auto row = kl.model.base().transition(s, a);
                const numvec nominal(row.begin(), row.end());
                const double got = kl_transition_inner(v, kl.model.set(s, a), nominal, b).value;
                const double grid = oracle::grid_min_feasible(
                    10000, P.A, P.c, [&](const numvec& q) { return dot(q, v) + kl_divergence(q, nominal) / b; });
                worst = std::max(worst, std::abs(got - grid));
            }
    }
    o.require(worst <= 1e-4, "KL inner vs grid " + num(worst));
    return o;
}

Outcome optimistic_operator_is_convex() {
    Outcome o;
    for (std::size_t s = 0; s < 2; ++s) {
        const CurvatureReport c = probe(oracle::example1_rmdp(), ProbeOperator::optimistic, s, 1.0);
        o.require(c.verdict == Curvature::convex || c.verdict == Curvature::affine,
                  "s=" + std::to_string(s) + ": " + describe(c));
    }
    return o;
}

Outcome supergradient_matches_differences() {
    Outcome o;
    const Rmdp r = oracle::example1_rmdp(true);
    const RegularizationConfig cfg = RegularizationConfig::uniform(2, 3, 5.0);
    oracle::Gen g(16);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        const numvec x = g.vector(2, 1.5, 50.0);
        const Matrix J = supergradient_t_tilde(r, cfg, x);
        for (std::size_t s = 0; s < 2; ++s)
            for (std::size_t t = 0; t < 2; ++t) {
                const auto f = [&](const numvec& y) { return t_tilde(r, cfg, y)[s]; };
                const double fd = oracle::central_difference(f, x, t, 1e-6 * x[t]);
                worst = std::max(worst, std::abs(J(s, t) - fd) / std::max(1.0, std::abs(fd)));
            }
    }
    o.require(worst <= 1e-4, "relative error " + num(worst));
    if (o.pass) o.detail = "worst relative error " + num(worst);
    return o;
}

bool all_finite(const nlohmann::json& j) {
    if (j.is_number_float()) return std::isfinite(j.get<double>());
    if (j.is_structured())
        for (const auto& e : j)
            if (!all_finite(e)) return false;
    return true;
}

Outcome overflow_guard() {
    Outcome o;
    const Instance inst = load_instance(CRMDP_DATA_DIR "/example1.json");
    const nlohmann::json j = cmd_bounds(inst, std::nullopt, BOverride{110.0, false});
    bool warned = false;
    for (const auto& w : j["warnings"])
        if (w["type"] == "OverflowRisk" && w["exponent"].get<double>() == 1210.0) warned = true;
    o.require(warned, "no OverflowRisk warning with exponent 1210");
    o.require(all_finite(j), "non-finite number in the report");
    const std::string text = j.dump();
    o.require(text.find("inf") == std::string::npos && text.find("nan") == std::string::npos,
              "non-finite text in the report");
    return o;
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"robust operator probe is neither convex nor concave", robust_operator_is_neither},
        {"regularized operator probe is neither for b = 5, 10", regularized_operator_is_neither},
        {"transformed operator is concave for b = 5, 10", transformed_operator_is_concave},
        {"sandwich 0 <= T - Treg <= log|A|/b", sandwich_holds},
        {"epsilon bound at b = choose_b(0.05)", epsilon_bound_holds},
        {"convex program recovers exp_b of the regularized fixed point", convex_program_matches_fixed_point},
        {"concise program matches the convex program", concise_program_matches_convex_program},
        {"strong duality of the inner problem", strong_duality},
        {"conjugate closed form", conjugate_closed_form},
        {"log-sum-exp is the KL conjugate", log_sum_exp_is_kl_conjugate},
        {"nominal LP duality and occupancy mass", mdp_lp_duality},
        {"fixed points solve the contraction programs", fixed_points_solve_programs},
        {"rvi, rpi and greedy evaluation agree", methods_agree},
        {"alternative operators are neither; KL inner matches grid", alternative_operator_probes},
        {"optimistic operator is convex", optimistic_operator_is_convex},
        {"supergradient matches central differences", supergradient_matches_differences},
        {"overflow guard reports instead of overflowing", overflow_guard},
    };

    const auto start = std::chrono::steady_clock::now();
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        if (!o.pass) ++failures;
        std::printf("[%s] %02zu %s%s%s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.empty() ? "" : " : ", o.detail.c_str());
        std::fflush(stdout);
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%d of %zu criteria passed in %.2f s\n", static_cast<int>(criteria.size()) - failures, criteria.size(),
                seconds);
    return failures == 0 ? 0 : 1;
}

#include "crmdp/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "crmdp/errors.hpp"
#include "crmdp/polyhedral_dual.hpp"

namespace crmdp {

using nlohmann::json;

std::string format_number(prec_t x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

RegularizationConfig resolve_regularization(const Instance& inst, const BOverride& b, std::optional<prec_t> epsilon) {
    const Rmdp& m = inst.model;
    const Policy baseline = inst.regularization ? inst.regularization->baseline
                                                : Policy::uniform(m.n_states(), m.n_actions());
    if (b.automatic) {
        if (!epsilon) throw UsageError("--b auto needs --epsilon");
        const prec_t chosen = m.n_actions() == 1 ? 1.0 : choose_b(*epsilon, m.discount(), m.n_actions());
        return RegularizationConfig(baseline, chosen);
    }
    if (b.value) return RegularizationConfig(baseline, *b.value);
    if (inst.regularization) return *inst.regularization;
    return RegularizationConfig(baseline, 1.0);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Policy policy_from_occupancy(const Mdp& mdp, std::span<const prec_t> mu, std::span<const prec_t> fallback_value) {
    const std::size_t S = mdp.n_states();
    const std::size_t A = mdp.n_actions();
    const Policy greedy = greedy_policy(mdp, fallback_value);
    Matrix p(S, A);
    for (std::size_t s = 0; s < S; ++s) {
        prec_t mass = 0.0;
        for (std::size_t a = 0; a < A; ++a) mass += std::max(0.0, mu[s * A + a]);
        for (std::size_t a = 0; a < A; ++a)
            p(s, a) = mass > feasibility_tol ? std::max(0.0, mu[s * A + a]) / mass : greedy(s, a);
    }
    return Policy(std::move(p));
}

void add_regularized_certificates(SolveReport& rep, const Rmdp& m, const RegularizationConfig& cfg) {
    const SandwichMargins sm = sandwich_margins(m, cfg, rep.value);
    rep.certificates["sandwich_lower"] = sm.lower;
    rep.certificates["sandwich_upper"] = sm.upper;
    rep.certificates["b"] = cfg.b;
    rep.certificates["epsilon_bound"] = std::log(static_cast<prec_t>(m.n_actions())) / (cfg.b * (1.0 - m.discount()));
}

PenaltyOptions penalty_options(prec_t tol) {
    PenaltyOptions o;
    o.feasibility_tol = std::max(tol, 1e-12);
    return o;
}

} // namespace

SolveReport cmd_solve(const Instance& inst, const std::string& method, prec_t tol, const BOverride& b,
                      std::optional<prec_t> epsilon) {
    if (!(tol > 0.0)) throw UsageError("--tol must be positive");
    const Rmdp& m = inst.model;
    const Mdp& base = m.base();
    const auto start = Clock::now();
    SolveReport rep;
    rep.method = method;

    if (method == "vi") {
        const ValueResult r = value_iteration(base, tol);
        rep.value = r.value;
        rep.policy = greedy_policy(base, r.value);
        rep.iterations = r.iterations;
        rep.residual = r.residual;
    } else if (method == "pi") {
        const PolicyResult r = policy_iteration(base);
        rep.value = r.value;
        rep.policy = r.policy;
        rep.iterations = r.iterations;
        rep.residual = max_abs_diff(bellman(base, r.value), r.value);
    } else if (method == "lp-primal" || method == "lp-dual") {
        const bool primal = method == "lp-primal";
        const LpSolution s = solve_lp(primal ? build_primal_lp(base) : build_dual_lp(base));
        if (s.status != LpStatus::optimal) throw NumericalBreakdown("nominal LP did not reach an optimal basis");
        if (primal) {
            rep.value = s.point;
            rep.policy = greedy_policy(base, s.point);
        } else {
            const ValueVector vi = value_iteration(base, std::max(tol, 1e-12)).value;
            rep.policy = policy_from_occupancy(base, s.point, vi);
            rep.value = policy_evaluation(base, rep.policy);
            rep.certificates["occupancy_mass"] = sum(s.point);
        }
        rep.certificates["lp_value"] = s.value;
        rep.residual = max_abs_diff(bellman(base, rep.value), rep.value);
    } else if (method == "rvi") {
        const ValueResult r = robust_value_iteration(m, tol);
        rep.value = r.value;
        rep.policy = robust_greedy_policy(m, r.value);
        rep.iterations = r.iterations;
        rep.residual = r.residual;
    } else if (method == "rpi") {
        const PolicyResult r = robust_policy_iteration(m, std::min(tol, 1e-10));
        rep.value = r.value;
        rep.policy = r.policy;
        rep.iterations = r.iterations;
        rep.residual = max_abs_diff(robust_bellman(m, r.value), r.value);
    } else if (method == "reg-fp") {
        if (m.rectangularity() == Rectangularity::s)
            throw UsageError("reg-fp needs (s,a)-rectangular sets; use rvi for s-rectangular models");
        const RegularizationConfig cfg = resolve_regularization(inst, b, epsilon);
        const ValueResult r = regularized_fixed_point(m, cfg, tol);
        rep.value = r.value;
        rep.policy = robust_greedy_policy(m, r.value);
        rep.iterations = r.iterations;
        rep.residual = r.residual;
        add_regularized_certificates(rep, m, cfg);
    } else if (method == "cvx") {
        if (m.rectangularity() == Rectangularity::s)
            throw UsageError("cvx needs (s,a)-rectangular sets");
        const RegularizationConfig cfg = resolve_regularization(inst, b, epsilon);
        rep = solve_convex_program(m, cfg, penalty_options(tol)).report;
        add_regularized_certificates(rep, m, cfg);
        return rep;
    } else if (method == "cvx-poly") {
        const PolyhedralRmdp pm(m);
        const RegularizationConfig cfg = resolve_regularization(inst, b, epsilon);
        rep = solve_concise_program(pm, cfg, penalty_options(tol)).report;
        add_regularized_certificates(rep, m, cfg);
        return rep;
    } else {
        throw UsageError("unknown method '" + method + "'");
    }
    rep.objective = dot(base.initial(), rep.value);
    rep.wall_seconds = seconds_since(start);
    return rep;
}

json report_to_json(const SolveReport& report) {
    json j;
    j["method"] = report.method;
    j["value"] = report.value;
    json pol = json::array();
    const Matrix& p = report.policy.probabilities();
    for (std::size_t s = 0; s < p.rows(); ++s) {
        const auto row = p.row(s);
        pol.push_back(numvec(row.begin(), row.end()));
    }
    j["policy"] = pol;
    j["objective"] = report.objective;
    j["iterations"] = report.iterations;
    j["residual"] = report.residual;
    j["wall_seconds"] = report.wall_seconds;
    j["converged"] = report.converged;
    j["certificates"] = report.certificates;
    return j;
}

// ---------------------------------------------------------------------------

namespace {

struct Checker {
    ValidationReport rep{json::array(), true};

    void check(const std::string& name, bool ok, json detail) {
        rep.checks.push_back({{"name", name}, {"passed", ok}, {"detail", std::move(detail)}});
        rep.passed = rep.passed && ok;
    }
    void agree(const std::string& name, const ValueVector& x, const ValueVector& y, prec_t tol) {
        const prec_t d = max_abs_diff(x, y);
        check(name, d <= tol, {{"max_abs_diff", d}, {"tolerance", tol}});
    }
    void skip(const std::string& name, const std::string& why) {
        rep.checks.push_back({{"name", name}, {"passed", true}, {"skipped", why}});
    }
};

} // namespace

ValidationReport cmd_validate(const Instance& inst, prec_t tol, const BOverride& b, std::optional<prec_t> epsilon,
                              unsigned seed) {
    const Rmdp& m = inst.model;
    const std::size_t S = m.n_states();
    const std::size_t A = m.n_actions();
    Checker c;
    const prec_t agree_tol = std::max(1e-6, 10 * tol);

    const SolveReport vi = cmd_solve(inst, "vi", tol);
    const SolveReport pi = cmd_solve(inst, "pi", tol);
    const SolveReport lpp = cmd_solve(inst, "lp-primal", tol);
    const SolveReport lpd = cmd_solve(inst, "lp-dual", tol);
    c.agree("nominal: vi = pi", vi.value, pi.value, agree_tol);
    c.agree("nominal: vi = lp-primal", vi.value, lpp.value, agree_tol);
    c.agree("nominal: vi = lp-dual", vi.value, lpd.value, agree_tol);
    {
        const prec_t gap = std::abs(lpp.certificates.at("lp_value") - lpd.certificates.at("lp_value"));
        c.check("nominal: LP duality gap", gap <= agree_tol, {{"gap", gap}});
        const prec_t mass = lpd.certificates.at("occupancy_mass");
        const prec_t expected = 1.0 / (1.0 - m.discount());
        c.check("nominal: occupancy mass = 1/(1 - discount)", std::abs(mass - expected) <= agree_tol,
                {{"mass", mass}, {"expected", expected}});
    }

    const SolveReport rvi = cmd_solve(inst, "rvi", std::min(tol, 1e-10));
    const SolveReport rpi = cmd_solve(inst, "rpi", tol);
    c.agree("robust: rvi = rpi", rvi.value, rpi.value, agree_tol);
    c.agree("robust: greedy policy evaluation = rvi", robust_policy_evaluation(m, rvi.policy), rvi.value, agree_tol);

    if (m.rectangularity() == Rectangularity::s) {
        c.skip("regularized methods", "s-rectangular model");
        return c.rep;
    }

    const RegularizationConfig cfg = resolve_regularization(inst, b, epsilon);
    const SolveReport reg = cmd_solve(inst, "reg-fp", std::min(tol, 1e-10), b, epsilon);
    const prec_t bound = reg.certificates.at("epsilon_bound");
    {
        bool below = true;
        for (std::size_t s = 0; s < S; ++s) below = below && reg.value[s] <= rvi.value[s] + 1e-9;
        const prec_t gap = max_abs_diff(rvi.value, reg.value);
        c.check("regularized: v_reg <= v*", below, {{"gap", gap}});
        c.check("regularized: ||v* - v_reg|| <= log|A| / (b (1 - discount))", gap <= bound + 1e-9,
                {{"gap", gap}, {"bound", bound}, {"b", cfg.b}});
    }
    if (A == 1) {
        const prec_t d = max_abs_diff(rvi.value, reg.value);
        c.check("single action: T = regularized T", d <= agree_tol, {{"max_abs_diff", d}});
    }
    {
        // Sandwich on random points around v*.
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<prec_t> u(-1.0, 1.0);
        prec_t worst_lower = inf, worst_upper = inf;
        const prec_t spread = std::max(1.0, norm_inf(rvi.value));
        for (int k = 0; k < 100; ++k) {
            numvec v = rvi.value;
            for (auto& x : v) x += spread * u(rng);
            const SandwichMargins sm = sandwich_margins(m, cfg, v);
            worst_lower = std::min(worst_lower, sm.lower);
            worst_upper = std::min(worst_upper, sm.upper);
        }
        c.check("regularized: sandwich 0 <= T - Treg <= log|A|/b", worst_lower >= -1e-9 && worst_upper >= -1e-9,
                {{"worst_lower_margin", worst_lower}, {"worst_upper_margin", worst_upper}, {"seed", seed}});
    }

    // The convex programs work on exp(b v); skip them when that leaves the guard.
    prec_t exponent = 0.0;
    for (const prec_t v : reg.value) exponent = std::max(exponent, cfg.b * v);
    if (exponent > exponent_guard) {
        c.skip("convex programs", "exponent " + format_number(exponent) + " exceeds the overflow guard");
        return c.rep;
    }
    const SolveReport cvx = cmd_solve(inst, "cvx", 1e-6, b, epsilon);
    const prec_t rel = [&] {
        const numvec ex = exp_b(reg.value, cfg.b);
        const numvec xc = exp_b(cvx.value, cfg.b);
        return max_abs_diff(ex, xc) / norm_inf(ex);
    }();
    c.check("convex program: x = exp(b v_reg)", rel <= 1e-4, {{"relative_error", rel}});
    const SolveReport poly = cmd_solve(inst, "cvx-poly", 1e-6, b, epsilon);
    const prec_t sx = cvx.certificates.at("sum_x");
    const prec_t sp = poly.certificates.at("sum_x");
    c.check("concise program: objective = convex program objective", std::abs(sx - sp) <= 1e-3 * std::abs(sx),
            {{"cvx", sx}, {"cvx_poly", sp}});
    return c.rep;
}

// ---------------------------------------------------------------------------

json cmd_probe(const Instance& inst, const ProbeSpec& spec, const std::string& out_path) {
    const std::vector<ProbeSample> samples = segment_probe(inst.model, spec);
    const CurvatureReport cr = classify_curvature(samples);

    std::ofstream csv(out_path);
    if (!csv) throw IoError("cannot write '" + out_path + "'");
    csv << "theta,value\n";
    for (const auto& p : samples) csv << format_number(p.theta) << ',' << format_number(p.value) << '\n';
    if (!csv) throw IoError("failed writing '" + out_path + "'");

    json verdict = {{"operator", to_string(spec.op)},
                    {"state", spec.state},
                    {"samples", spec.samples},
                    {"b", spec.b},
                    {"from", spec.from},
                    {"to", spec.to},
                    {"verdict", to_string(cr.verdict)},
                    {"convexity_violation", cr.convexity_violation},
                    {"concavity_violation", cr.concavity_violation},
                    {"csv", out_path}};
    const std::string side = out_path + ".json";
    std::ofstream js(side);
    if (!js) throw IoError("cannot write '" + side + "'");
    js << verdict.dump(2) << '\n';
    return verdict;
}

// ---------------------------------------------------------------------------

json cmd_bounds(const Instance& inst, std::optional<prec_t> epsilon, const BOverride& b) {
    const Rmdp& m = inst.model;
    const std::size_t A = m.n_actions();
    if (m.rectangularity() == Rectangularity::s)
        throw UsageError("bounds needs (s,a)-rectangular sets");
    if (!epsilon) epsilon = inst.epsilon;

    BOverride choice = b;
    if (!choice.value && !choice.automatic && epsilon) choice.automatic = true;
    if (!choice.value && !choice.automatic && !inst.regularization && inst.epsilon) {
        epsilon = inst.epsilon;
        choice.automatic = true;
    }
    const RegularizationConfig cfg = resolve_regularization(inst, choice, epsilon);

    prec_t r_max = 0.0;
    for (std::size_t s = 0; s < m.n_states(); ++s)
        for (std::size_t a = 0; a < A; ++a) r_max = std::max(r_max, m.reward(s, a));
    const prec_t predicted = std::log(static_cast<prec_t>(A)) / (cfg.b * (1.0 - m.discount()));

    json out;
    out["b"] = cfg.b;
    if (epsilon) out["epsilon"] = *epsilon;
    out["predicted_bound"] = predicted;
    out["discount"] = m.discount();
    out["n_actions"] = A;
    out["max_reward"] = r_max;
    out["warnings"] = json::array();

    // Largest exponents that exp_b would see: one reward term, and the value itself.
    const ValueVector v_star = robust_value_iteration(m, 1e-10).value;
    const prec_t reward_exponent = cfg.b * r_max;
    const prec_t value_exponent = cfg.b * norm_inf(v_star);
    out["reward_exponent"] = reward_exponent;
    out["value_exponent"] = value_exponent;
    out["largest_exponent"] = reward_exponent;

    // The reward term is what a single exp() in t_tilde sees; the value exponent
    // guards exp_b(v*) as used by the convex programs.
    const bool reward_risk = reward_exponent > exponent_guard;
    if (reward_risk || value_exponent > exponent_guard) {
        const prec_t exponent = reward_risk ? reward_exponent : value_exponent;
        const std::string what = reward_risk ? "b * max reward" : "b * max value";
        const OverflowRisk risk(what + " = " + format_number(exponent) + " exceeds the guard " +
                                    format_number(exponent_guard),
                                exponent);
        const prec_t factor = r_max > 0.0 ? r_max : 1.0;
        out["guard"] = "overflow-risk";
        out["warnings"].push_back(
            {{"type", "OverflowRisk"},
             {"source", reward_risk ? "reward" : "value"},
             {"message", risk.what()},
             {"exponent", risk.exponent()},
             {"guard", exponent_guard},
             {"suggestion", "divide all rewards by " + format_number(factor) +
                                " (rescale_rewards); the bound and the gap scale by the same factor"}});
    } else {
        out["guard"] = "ok";
    }

    // The gap is measured in value space, which stays finite whatever the exponent.
    const ValueVector v_reg = regularized_fixed_point(m, cfg, 1e-10).value;
    const prec_t gap = max_abs_diff(v_star, v_reg);
    out["measured_gap"] = gap;
    out["bound_holds"] = gap <= predicted + 1e-9;
    if (epsilon) out["within_epsilon"] = gap <= *epsilon + 1e-9;
    return out;
}

} // namespace crmdp

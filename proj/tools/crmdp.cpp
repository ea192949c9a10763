// Command-line front end: solve, validate, probe, bounds.
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "crmdp/commands.hpp"
#include "crmdp/errors.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_input = 1;
constexpr int exit_nonconvergence = 2;

crmdp::BOverride parse_b(const std::string& text) {
    crmdp::BOverride b;
    if (text.empty()) return b;
    if (text == "auto") {
        b.automatic = true;
        return b;
    }
    try {
        std::size_t used = 0;
        b.value = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
    } catch (const std::exception&) {
        throw crmdp::UsageError("--b expects a number or 'auto', got '" + text + "'");
    }
    return b;
}

crmdp::numvec parse_point(const std::string& text, const char* flag) {
    crmdp::numvec out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw crmdp::UsageError(std::string(flag) + " expects comma-separated numbers");
        }
    }
    return out;
}

void print_error(const char* kind, const std::string& what) {
    nlohmann::json j = {{"error", kind}, {"message", what}};
    std::cerr << j.dump() << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust MDP solver"};
    app.require_subcommand(1);

    std::string instance_path, method, b_text, op_name = "T", out_path, from_text, to_text;
    double tol = 1e-8;
    std::optional<double> epsilon;
    std::size_t state = 0, samples = 201;
    unsigned seed = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--instance", instance_path, "instance JSON")->required();
        sub->add_option("--tol", tol, "tolerance")->capture_default_str();
        sub->add_option("--epsilon", epsilon, "target accuracy for --b auto");
        sub->add_option("--b", b_text, "inverse temperature (FLOAT or auto)");
        sub->add_option("--seed", seed, "seed for sampled checks")->capture_default_str();
    };

    CLI::App* solve = app.add_subcommand("solve", "solve an instance");
    add_common(solve);
    solve->add_option("--method", method, "vi|pi|lp-primal|lp-dual|rvi|rpi|reg-fp|cvx|cvx-poly")->required();

    CLI::App* validate = app.add_subcommand("validate", "cross-check all applicable methods");
    add_common(validate);

    CLI::App* probe = app.add_subcommand("probe", "sample an operator along a segment");
    add_common(probe);
    probe->add_option("--operator", op_name, "T|T-reg|t-reg|t|T-opt|T-l2|t-l2-phi|t-l2-phi-inv|T-kl|t-kl")
        ->capture_default_str();
    probe->add_option("--state", state, "component index")->capture_default_str();
    probe->add_option("--samples", samples, "number of samples")->capture_default_str();
    probe->add_option("--out", out_path, "CSV output path")->required();
    probe->add_option("--from", from_text, "value-space endpoint at theta = 1, comma separated");
    probe->add_option("--to", to_text, "value-space endpoint at theta = 0, comma separated");

    CLI::App* bounds = app.add_subcommand("bounds", "report b, the predicted bound and the measured gap");
    add_common(bounds);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_input;
    }

    try {
        const crmdp::Instance inst = crmdp::load_instance(instance_path);
        const crmdp::BOverride b = parse_b(b_text);
        if (*solve) {
            std::cout << crmdp::report_to_json(crmdp::cmd_solve(inst, method, tol, b, epsilon)).dump(2) << '\n';
        } else if (*validate) {
            const crmdp::ValidationReport r = crmdp::cmd_validate(inst, tol, b, epsilon, seed);
            std::cout << nlohmann::json{{"passed", r.passed}, {"checks", r.checks}}.dump(2) << '\n';
            if (!r.passed) return exit_input;
        } else if (*probe) {
            crmdp::ProbeSpec spec;
            spec.op = crmdp::probe_operator_from_string(op_name);
            spec.state = state;
            spec.samples = samples;
            const crmdp::RegularizationConfig cfg = crmdp::resolve_regularization(inst, b, epsilon);
            spec.b = cfg.b;
            spec.baseline = cfg.baseline;
            crmdp::numvec from = parse_point(from_text, "--from");
            crmdp::numvec to = parse_point(to_text, "--to");
            if (from.empty() || to.empty()) {
                if (inst.model.n_states() != 2) throw crmdp::UsageError("--from and --to are required");
                // The segment from Example 1.
                if (from.empty()) from = {10.5, 0.85};
                if (to.empty()) to = {0.5, 4.0};
            }
            spec.from = crmdp::probe_domain_point(spec, from);
            spec.to = crmdp::probe_domain_point(spec, to);
            std::cout << crmdp::cmd_probe(inst, spec, out_path).dump(2) << '\n';
        } else if (*bounds) {
            std::cout << crmdp::cmd_bounds(inst, epsilon, b).dump(2) << '\n';
        }
    } catch (const crmdp::NonConvergence& e) {
        print_error("NonConvergence", e.what());
        return exit_nonconvergence;
    } catch (const crmdp::IterationLimit& e) {
        print_error("IterationLimit", e.what());
        return exit_nonconvergence;
    } catch (const crmdp::Error& e) {
        print_error("InputError", e.what());
        return exit_input;
    }
    return exit_ok;
}

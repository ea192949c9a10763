#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "crmdp/convex_solver.hpp"
#include "crmdp/instance.hpp"

namespace crmdp {

/// How the command line overrides the instance's regularization.
struct BOverride {
    std::optional<prec_t> value; // --b FLOAT
    bool automatic = false;      // --b auto
};

/// Regularization for a command: the override, then the instance, then b = 1 with a uniform baseline.
RegularizationConfig resolve_regularization(const Instance& inst, const BOverride& b, std::optional<prec_t> epsilon);

/// Methods: vi, pi, lp-primal, lp-dual, rvi, rpi, reg-fp, cvx, cvx-poly. Throws UsageError for unknown ones.
SolveReport cmd_solve(const Instance& inst, const std::string& method, prec_t tol, const BOverride& b = {},
                      std::optional<prec_t> epsilon = std::nullopt);

nlohmann::json report_to_json(const SolveReport& report);

struct ValidationReport {
    nlohmann::json checks; // one object per check: name, passed, detail
    bool passed = true;
};

/// Runs every applicable method and checks pairwise agreement and the sandwich and epsilon bounds.
ValidationReport cmd_validate(const Instance& inst, prec_t tol, const BOverride& b = {},
                              std::optional<prec_t> epsilon = std::nullopt, unsigned seed = 0);

/// Writes "theta,value" rows to out_path and the curvature verdict to out_path + ".json"; returns the verdict.
nlohmann::json cmd_probe(const Instance& inst, const ProbeSpec& spec, const std::string& out_path);

/**
Chosen b, predicted bound, measured gap and largest exponent. An exponent
above the guard is reported as a structured OverflowRisk warning, never as
non-finite numbers. epsilon defaults to the instance's.
*/
nlohmann::json cmd_bounds(const Instance& inst, std::optional<prec_t> epsilon, const BOverride& b = {});

/// 17 significant digits.
std::string format_number(prec_t x);

} // namespace crmdp

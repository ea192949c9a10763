#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "crmdp/mdp.hpp"

namespace crmdp {

/// Result summary shared by every solution method.
struct SolveReport {
    std::string method;
    ValueVector value;
    Policy policy;
    prec_t objective = 0.0; // initial' value
    std::size_t iterations = 0;
    prec_t residual = 0.0;
    double wall_seconds = 0.0;
    bool converged = true;
    /// Named bound certificates, for example sandwich margins.
    std::map<std::string, prec_t> certificates;
};

} // namespace crmdp

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "crmdp/regularized.hpp"

namespace crmdp {

/// A model loaded from an instance document, with labels and optional regularization.
struct Instance {
    std::vector<std::string> states;
    std::vector<std::string> actions;
    Rmdp model;
    std::optional<RegularizationConfig> regularization;
    /// Set when the document asked for b = "auto"; b was resolved with choose_b.
    std::optional<prec_t> epsilon;
};

/**
Parses a JSON instance document. Throws ParseError (with line and column)
for malformed JSON and ValidationError naming the violated invariant.
*/
Instance parse_instance(const std::string& text);

/// Reads and parses a file. Throws IoError when it cannot be read.
Instance load_instance(const std::string& path);

/// Writes explicit arrays for every set so that reloading reproduces the model exactly.
std::string serialize_instance(const Instance& inst);

} // namespace crmdp

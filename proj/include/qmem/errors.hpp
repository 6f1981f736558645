#pragma once

#include <stdexcept>
#include <string>

namespace qmem {

// Bad inputs: invalid parameters, malformed configs/files, out-of-domain
// arguments. CLI maps these to exit code 2.
struct InvalidInput : std::runtime_error {
    explicit InvalidInput(const std::string& what) : std::runtime_error(what) {}
};

// Runtime numerical failures: divergence, non-convergence, no bracketed root.
// CLI maps these to exit code 3.
struct NumericFailure : std::runtime_error {
    explicit NumericFailure(const std::string& what) : std::runtime_error(what) {}
};

// Grid cannot resolve the fastest timescale of the problem.
struct ResolutionError : InvalidInput {
    explicit ResolutionError(const std::string& what) : InvalidInput(what) {}
};

// NaN/Inf appeared in the solver state.
struct DivergenceError : NumericFailure {
    explicit DivergenceError(const std::string& what) : NumericFailure(what) {}
};

// Fit did not converge (message carries best-so-far diagnostics).
struct FitFailure : NumericFailure {
    explicit FitFailure(const std::string& what) : NumericFailure(what) {}
};

}  // namespace qmem

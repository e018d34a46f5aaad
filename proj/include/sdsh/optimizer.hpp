#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace sdsh {

/// Objective to minimize: returns f(x) and writes the gradient into `grad`.
/// Non-finite values are treated as infeasible and rejected by the line search.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct BoxBounds {
    std::vector<double> lower;
    std::vector<double> upper;

    static BoxBounds unbounded(std::size_t n) {
        return {std::vector<double>(n, -std::numeric_limits<double>::infinity()),
                std::vector<double>(n, std::numeric_limits<double>::infinity())};
    }
};

struct LbfgsOptions {
    int memory = 10;
    int max_iterations = 500;
    /// Stop when (f[k - window] - f[k]) / max(|f[k]|, 1) < relative_tolerance.
    double relative_tolerance = 1e-9;
    int relative_window = 5;
    /// Stop when the projected gradient infinity-norm falls below this.
    double gradient_tolerance = 1e-6;
    double armijo = 1e-4;
    int max_line_search = 50;
};

struct LbfgsResult {
    std::vector<double> x;
    double value = std::numeric_limits<double>::infinity();
    std::vector<double> trace;  // objective after each accepted iterate, starting at x0
    int iterations = 0;
    bool converged = false;
    std::string reason;
    double projected_gradient_norm = std::numeric_limits<double>::infinity();
};

/// Projected limited-memory BFGS on a box. Directions are computed on the variables that
/// are not held at an active bound; steps are projected back onto the box and accepted by
/// an Armijo test along the projection arc. Values in `trace` are non-increasing.
LbfgsResult minimize_lbfgs(const Objective& objective, std::vector<double> x0, const BoxBounds& bounds,
                           const LbfgsOptions& options = {});

}  // namespace sdsh

#pragma once

#include <functional>
#include <vector>

#include "qsm/volume.hpp"

namespace qsm {

using Blocks = std::vector<ScalarVolume>;

struct DescentOptions {
    int iterations = 100;
    /// Trial step of the first iteration; each later iteration starts from
    /// twice the last accepted step.
    double initial_step = 1.0;
    /// Per-block multipliers on the search direction (a diagonal preconditioner).
    /// Empty means all ones.
    std::vector<double> block_scales;
    double armijo = 1e-4;
    double min_step = 1e-20;
};

struct DescentTrace {
    std::vector<double> loss; ///< loss[0] is the initial value
    int iterations_run = 0;
    /// True when the line search could not find a decreasing step.
    bool stalled = false;
};

/// Gradient descent with halving backtracking under the Armijo condition.
/// Throws NumericalError on NaN/Inf or if an accepted step increases the loss.
DescentTrace gradient_descent(Blocks& x, const std::function<double(const Blocks&)>& loss,
                              const std::function<Blocks(const Blocks&)>& gradient,
                              const DescentOptions& options);

} // namespace qsm

#pragma once

#include <functional>
#include <span>
#include <vector>

namespace qsm {

struct CgResult {
    int iterations = 0;
    /// ||b - A x|| / ||b|| at exit (0 when b is zero).
    double relative_residual = 0.0;
    bool converged = false;
};

using LinearOperator = std::function<void(std::span<const double> in, std::span<double> out)>;

/// Conjugate gradient for a symmetric positive semi-definite operator. `x`
/// holds the initial guess and receives the solution. Reductions are ordered,
/// so results do not depend on the thread count.
CgResult conjugate_gradient(const LinearOperator& apply, std::span<const double> b,
                            std::span<double> x, double tol, int max_iter);

} // namespace qsm

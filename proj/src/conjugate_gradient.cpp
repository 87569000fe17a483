#include "qsm/conjugate_gradient.hpp"

#include <cmath>

#include "qsm/error.hpp"
#include "qsm/kernels.hpp"

namespace qsm {

namespace kern = kernels::parallel;

CgResult conjugate_gradient(const LinearOperator& apply, std::span<const double> b,
                            std::span<double> x, double tol, int max_iter) {
    require(b.size() == x.size(), "conjugate_gradient: size mismatch");
    require(tol > 0, "conjugate_gradient: tolerance must be positive");
    require(max_iter >= 0, "conjugate_gradient: negative iteration limit");

    const std::size_t n = b.size();
    const double b_norm = std::sqrt(kern::dot(b, b));
    CgResult result;
    if (b_norm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        result.converged = true;
        return result;
    }

    std::vector<double> r(n), p(n), ap(n);
    apply(x, ap);
    kern::add_scaled(b, -1.0, ap, r);
    p = r;
    double rr = kern::dot(r, r);

    int it = 0;
    while (std::sqrt(rr) > tol * b_norm && it < max_iter) {
        apply(p, ap);
        const double pap = kern::dot(p, ap);
        if (!(pap > 0.0)) break; // search direction in the null space
        const double alpha = rr / pap;
        kern::axpy(alpha, p, x);
        kern::axpy(-alpha, ap, r);
        const double rr_next = kern::dot(r, r);
        if (!std::isfinite(rr_next)) throw NumericalError("conjugate gradient produced NaN/Inf");
        kern::add_scaled(r, rr_next / rr, p, p);
        rr = rr_next;
        ++it;
    }
    result.iterations = it;
    result.relative_residual = std::sqrt(rr) / b_norm;
    result.converged = result.relative_residual <= tol;
    return result;
}

} // namespace qsm

#include "qsm/gradient.hpp"

#include <cmath>
#include <vector>

#include "qsm/kernels.hpp"

namespace qsm {

ScalarVolume gradient_forward(const ScalarVolume& v, Axis axis) {
    ScalarVolume out(v.dims(), v.spacing(), v.unit());
    kernels::parallel::forward_difference(v.values(), v.dims(), static_cast<int>(axis),
                                          out.values());
    return out;
}

ScalarVolume gradient_adjoint(const ScalarVolume& v, Axis axis) {
    ScalarVolume out(v.dims(), v.spacing(), v.unit());
    kernels::parallel::forward_difference_adjoint(v.values(), v.dims(), static_cast<int>(axis),
                                                  out.values());
    return out;
}

double total_variation(const ScalarVolume& v) {
    std::vector<double> g(v.size());
    double acc = 0.0;
    for (int a = 0; a < 3; ++a) {
        kernels::parallel::forward_difference(v.values(), v.dims(), a, g);
        for (double x : g) acc += std::abs(x);
    }
    return acc;
}

double smoothed_total_variation(const ScalarVolume& v, double eps) {
    std::vector<double> g(v.size());
    const double floor = std::sqrt(eps);
    double acc = 0.0;
    for (int a = 0; a < 3; ++a) {
        kernels::parallel::forward_difference(v.values(), v.dims(), a, g);
        for (double& x : g) x = std::sqrt(x * x + eps) - floor;
        acc += kernels::parallel::sum(g);
    }
    return acc;
}

ScalarVolume smoothed_total_variation_gradient(const ScalarVolume& v, double eps) {
    ScalarVolume out(v.dims(), v.spacing(), v.unit());
    std::vector<double> g(v.size()), back(v.size());
    for (int a = 0; a < 3; ++a) {
        kernels::parallel::forward_difference(v.values(), v.dims(), a, g);
        for (double& x : g) x /= std::sqrt(x * x + eps);
        kernels::parallel::forward_difference_adjoint(g, v.dims(), a, back);
        kernels::parallel::axpy(1.0, back, out.values());
    }
    return out;
}

} // namespace qsm

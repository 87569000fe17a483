#include "qsm/descent.hpp"

#include <cmath>

#include <fmt/format.h>

#include "qsm/error.hpp"
#include "qsm/kernels.hpp"

namespace qsm {

namespace kern = kernels::parallel;

DescentTrace gradient_descent(Blocks& x, const std::function<double(const Blocks&)>& loss,
                              const std::function<Blocks(const Blocks&)>& gradient,
                              const DescentOptions& options) {
    require(options.iterations >= 1, "descent: iterations must be at least 1");
    require(options.initial_step > 0, "descent: initial step must be positive");
    std::vector<double> scales = options.block_scales;
    if (scales.empty()) scales.assign(x.size(), 1.0);
    require(scales.size() == x.size(), "descent: one scale per block required");

    DescentTrace trace;
    double current = loss(x);
    if (!std::isfinite(current)) throw NumericalError("descent: initial loss is not finite");
    trace.loss.push_back(current);

    double step = options.initial_step / 2.0;
    for (int it = 0; it < options.iterations; ++it) {
        const Blocks g = gradient(x);
        double slope = 0.0;
        for (std::size_t b = 0; b < x.size(); ++b)
            slope += scales[b] * kern::dot(g[b].values(), g[b].values());
        if (!std::isfinite(slope)) throw NumericalError("descent: gradient is not finite");
        if (slope == 0.0) break;

        step *= 2.0;
        Blocks trial = x;
        double next = 0.0;
        bool accepted = false;
        while (step >= options.min_step) {
            for (std::size_t b = 0; b < x.size(); ++b)
                kern::add_scaled(x[b].values(), -step * scales[b], g[b].values(),
                                 trial[b].values());
            next = loss(trial);
            if (std::isfinite(next) && next <= current - options.armijo * step * slope) {
                accepted = true;
                break;
            }
            step /= 2.0;
        }
        if (!accepted) {
            trace.stalled = true;
            break;
        }
        if (next > current)
            throw NumericalError(fmt::format("descent: loss rose from {} to {} at iteration {}",
                                             current, next, it + 1));
        x = std::move(trial);
        current = next;
        trace.loss.push_back(current);
        ++trace.iterations_run;
    }
    return trace;
}

} // namespace qsm

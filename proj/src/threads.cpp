#include "qsm/threads.hpp"

#include <charconv>
#include <cstdlib>
#include <cstring>

#include <omp.h>

namespace qsm {

int configure_threads_from_env() {
    if (const char* env = std::getenv("QSM_THREADS"); env && *env) {
        int requested = 0;
        const auto [ptr, ec] = std::from_chars(env, env + std::strlen(env), requested);
        if (ec == std::errc{} && requested > 0) {
            const int cap = omp_get_num_procs();
            omp_set_num_threads(requested < cap ? requested : cap);
        }
    }
    return omp_get_max_threads();
}

int max_threads() { return omp_get_max_threads(); }

} // namespace qsm

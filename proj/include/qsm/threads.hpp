#pragma once

namespace qsm {

/// Caps the OpenMP worker count at $QSM_THREADS when it is set to a positive
/// integer. Returns the count in effect.
int configure_threads_from_env();

int max_threads();

} // namespace qsm

#pragma once

#include <cstddef>
#include <functional>

namespace totvar {

/// Worker count: TOTVAR_THREADS if set and positive, else hardware concurrency.
std::size_t default_worker_count();

/// Runs body(i) for i in [0, n). Work items must write only to their own slot;
/// results are then independent of scheduling. If any items throw, the
/// exception of the lowest failing index is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  std::size_t workers = 0);

} // namespace totvar

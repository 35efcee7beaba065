#pragma once

#include <cstddef>
#include <functional>

namespace rpsim {

/// 0 means one worker per hardware thread.
int resolve_workers(int requested) noexcept;

/// Calls body(i) for i in [0, count) on up to `workers` threads. Each index is handled
/// exactly once; callers write results into per-index slots so output does not depend on
/// scheduling. The exception from the lowest failing index is rethrown.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body);

}  // namespace rpsim

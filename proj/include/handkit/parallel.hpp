#pragma once

#include <cstddef>
#include <functional>

namespace handkit {

/// 0 means "all hardware threads".
std::size_t resolve_workers(std::size_t requested);

/// Runs fn(i) for i in [0, n) on up to `workers` threads. If any call throws,
/// the exception from the lowest failing index is rethrown after all workers
/// stop.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

} // namespace handkit

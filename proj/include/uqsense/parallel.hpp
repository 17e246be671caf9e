#pragma once

#include <cstddef>
#include <functional>

namespace uqsense {

/// Worker count: `requested` if nonzero, else hardware concurrency; both
/// capped by the UQSENSE_THREADS environment variable when set.
std::size_t resolve_workers(std::size_t requested = 0);

/// Runs body(0..count-1) on up to `workers` threads pulling indices from a
/// shared counter. If any call throws, the exception from the lowest index
/// is rethrown after all workers stop, so failures are reported the same
/// way regardless of scheduling.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body);

}  // namespace uqsense

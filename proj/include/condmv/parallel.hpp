#pragma once

#include <cstddef>
#include <functional>

namespace condmv {

/// Worker count from CONDMV_WORKERS, falling back to hardware concurrency.
int default_workers();

/// Runs body(begin, end) over a static partition of [0, count). Each index is
/// visited exactly once; callers must write only to slots owned by their range
/// so results never depend on the worker count.
void parallel_for(std::size_t count, int workers,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace condmv

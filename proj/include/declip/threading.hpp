#pragma once

#include <cstdint>
#include <functional>

namespace declip {

// Thread cap: DECLIP_NUM_THREADS if set (minimum 1), else hardware concurrency.
int max_threads();

// Runs fn(i) for i in [0, n). Work is split into contiguous static chunks;
// callers must write results only to slot i so the merge order is fixed and
// the output is identical for any thread count.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn,
                  int threads = 0);

}  // namespace declip

#pragma once

#include <cstdint>
#include <functional>

namespace twoscale {

// Resolves the worker budget: explicit request > TWOSCALE_THREADS > hardware.
int resolve_worker_count(int requested);

// Runs fn(i) for i in [0, count) on `workers` threads. Work is handed out
// dynamically in chunks of `grain`: a worker pulls the next chunk as soon as it
// finishes its previous one. With workers == 1 the loop runs inline in index
// order, which keeps single-threaded runs bitwise deterministic. Exceptions
// from workers are rethrown on the calling thread.
void parallel_for(int workers, std::int64_t count, std::int64_t grain,
                  const std::function<void(std::int64_t)>& fn);

inline void parallel_for(int workers, std::int64_t count,
                         const std::function<void(std::int64_t)>& fn) {
    parallel_for(workers, count, 1, fn);
}

}  // namespace twoscale

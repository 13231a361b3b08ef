#include "twoscale/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace twoscale {

int resolve_worker_count(int requested) {
    if (requested >= 1) return requested;
    if (const char* env = std::getenv("TWOSCALE_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallel_for(int workers, std::int64_t count, std::int64_t grain,
                  const std::function<void(std::int64_t)>& fn) {
    if (count <= 0) return;
    if (grain < 1) grain = 1;
    if (workers <= 1 || count <= grain) {
        for (std::int64_t i = 0; i < count; ++i) fn(i);
        return;
    }

    std::atomic<std::int64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto body = [&]() {
        while (true) {
            const std::int64_t begin = next.fetch_add(grain);
            if (begin >= count) return;
            const std::int64_t end = std::min(begin + grain, count);
            try {
                for (std::int64_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (int t = 1; t < workers; ++t) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace twoscale

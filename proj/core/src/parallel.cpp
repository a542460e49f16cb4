#include "selftrain/parallel.hpp"

#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace selftrain {

std::size_t worker_count() {
    static const std::size_t count = [] {
        if (const char* env = std::getenv("SELFTRAIN_WORKERS")) {
            const long parsed = std::strtol(env, nullptr, 10);
            if (parsed >= 1) {
                return static_cast<std::size_t>(parsed);
            }
            return static_cast<std::size_t>(1);
        }
        const unsigned hw = std::thread::hardware_concurrency();
        return static_cast<std::size_t>(hw > 0 ? hw : 1);
    }();
    return count;
}

void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) {
        return;
    }
    const std::size_t workers = std::min(worker_count(), n);
    if (workers <= 1) {
        fn(0, n);
        return;
    }

    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> threads;
    threads.reserve(workers);

    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(begin + chunk, n);
        if (begin >= end) {
            break;
        }
        threads.emplace_back([&, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) {
                    first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& thread : threads) {
        thread.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

}  // namespace selftrain

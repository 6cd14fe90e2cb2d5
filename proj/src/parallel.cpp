#include "effreg/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace effreg {

namespace {
thread_local bool in_parallel_region = false;
}

unsigned max_threads() {
    if (const char* env = std::getenv("EFFREG_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
        return 1;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& fn,
                  unsigned threads) {
    if (n == 0) return;
    if (threads <= 1 || n == 1 || in_parallel_region) {
        fn(0, n);
        return;
    }
    const unsigned workers = static_cast<unsigned>(
        std::min<std::size_t>(threads, n));
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    std::vector<std::exception_ptr> errors(workers);
    auto run = [&](unsigned w) {
        in_parallel_region = true;
        const std::size_t b = w * chunk;
        const std::size_t e = std::min(n, b + chunk);
        if (b < e) {
            try {
                fn(b, e);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        }
        in_parallel_region = false;
    };
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run, w);
    run(0);
    for (auto& t : pool) t.join();
    for (auto& err : errors)
        if (err) std::rethrow_exception(err);
}

void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& fn) {
    parallel_for(n, fn, max_threads());
}

} // namespace effreg

#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace perciso {

// Static partition of [0, count) across hardware threads. Work items write to
// disjoint per-index slots, so results are independent of scheduling.
template <typename Fn>
void parallel_for(long long count, Fn&& fn, unsigned max_threads = 0) {
    unsigned t = std::thread::hardware_concurrency();
    if (t == 0) t = 1;
    if (max_threads > 0) t = std::min(t, max_threads);
    t = static_cast<unsigned>(std::min<long long>(t, std::max<long long>(1, count)));
    if (t <= 1) {
        for (long long i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(t);
    for (unsigned w = 0; w < t; ++w) {
        workers.emplace_back([&, w]() {
            try {
                for (long long i = w; i < count; i += t) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : workers) th.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace perciso

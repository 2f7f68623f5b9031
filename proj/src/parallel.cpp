#include "flowstitch/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace flowstitch {

namespace {
std::atomic<int> g_threads{0};

int env_default() {
    if (const char* s = std::getenv("FLOWSTITCH_THREADS")) {
        int n = std::atoi(s);
        if (n > 0) return n;
    }
    return 0;
}
} // namespace

void set_thread_count(int n) { g_threads.store(n < 0 ? 0 : n); }

int thread_count() { return g_threads.load(); }

int resolved_thread_count() {
    int n = g_threads.load();
    if (n == 0) n = env_default();
    if (n == 0) n = static_cast<int>(std::thread::hardware_concurrency());
    return std::max(1, n);
}

void parallel_rows(int rows, const std::function<void(int, int)>& fn) {
    int workers = std::min(resolved_thread_count(), rows);
    if (workers <= 1 || rows <= 1) {
        fn(0, rows);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    int chunk = (rows + workers - 1) / workers;
    for (int w = 1; w < workers; ++w) {
        int begin = w * chunk;
        int end = std::min(rows, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back(fn, begin, end);
    }
    fn(0, std::min(rows, chunk));
    for (auto& t : pool) t.join();
}

} // namespace flowstitch

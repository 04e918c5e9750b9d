#include "ebs/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ebs {

namespace {
std::atomic<int> g_override{0};

int env_threads() {
    if (const char* s = std::getenv("ENSEMBLE_BACKSTEP_THREADS")) {
        char* end = nullptr;
        long n = std::strtol(s, &end, 10);
        if (end != s && n > 0) return static_cast<int>(n);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}
}  // namespace

int thread_count() {
    int o = g_override.load();
    return o > 0 ? o : env_threads();
}

void set_thread_count(int n) { g_override.store(n > 0 ? n : 0); }

void parallel_for(Eigen::Index n, const std::function<void(Eigen::Index)>& body) {
    if (n <= 0) return;
    const int workers = static_cast<int>(std::min<Eigen::Index>(thread_count(), n));
    if (workers <= 1) {
        for (Eigen::Index i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<Eigen::Index> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&] {
        for (;;) {
            Eigen::Index i = next.fetch_add(1);
            if (i >= n) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (int w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace ebs

#include "xaudit/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace xaudit {

namespace {
std::atomic<int> g_thread_cap{0};
} // namespace

void set_thread_cap(int cap) { g_thread_cap.store(cap < 0 ? 0 : cap); }

int resolve_thread_count(std::size_t n_items) {
    int cap = g_thread_cap.load();
    if (cap == 0) {
        if (const char* env = std::getenv("XAUDIT_THREADS")) {
            cap = std::atoi(env);
        }
    }
    if (cap <= 0) {
        cap = static_cast<int>(std::thread::hardware_concurrency());
        if (cap <= 0) cap = 1;
    }
    if (static_cast<std::size_t>(cap) > n_items) cap = static_cast<int>(n_items);
    return cap < 1 ? 1 : cap;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    const int workers = resolve_thread_count(n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                next.store(n); // stop handing out work
                return;
            }
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    if (first_error) std::rethrow_exception(first_error);
}

} // namespace xaudit

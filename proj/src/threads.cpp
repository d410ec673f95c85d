#include "cdi/threads.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <omp.h>

namespace cdi {

namespace {

int initial_threads() {
    int n = omp_get_max_threads();
    if (const char* env = std::getenv("CDI_THREADS")) {
        int cap = std::atoi(env);
        if (cap >= 1) n = std::min(n, cap);
    }
    return std::max(1, n);
}

std::atomic<int> g_threads{initial_threads()};
std::atomic<bool> g_deterministic{false};

} // namespace

int max_threads() { return g_threads.load(); }

void set_max_threads(int n) { g_threads.store(std::max(1, n)); }

void set_deterministic(bool on) { g_deterministic.store(on); }

bool deterministic() { return g_deterministic.load(); }

int kernel_threads() { return g_deterministic.load() ? 1 : g_threads.load(); }

} // namespace cdi

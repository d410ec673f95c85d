#pragma once

namespace cdi {

// Worker-thread cap shared by every OpenMP kernel in the library.
//
// All kernels partition work so that each output element is written by
// exactly one iteration and reductions run in a fixed order, so results are
// bitwise identical for any thread count. Deterministic mode additionally
// pins the count to 1 (no intra-op parallelism at all).
//
// The initial cap is min(omp_get_max_threads(), CDI_THREADS) when the
// CDI_THREADS environment variable is set.
int max_threads();
void set_max_threads(int n);

void set_deterministic(bool on);
bool deterministic();

// Threads to use for a parallel region: 1 in deterministic mode.
int kernel_threads();

} // namespace cdi

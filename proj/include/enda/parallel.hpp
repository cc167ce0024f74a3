#pragma once

#include <functional>

namespace enda::parallel {

/// Intra-run thread cap from ENSEMBLE_DA_THREADS (default 1). Read once.
int thread_cap();

/// Runs fn(0..n-1) over contiguous chunks on up to thread_cap() threads.
/// Iterations must be independent; results are then identical for any cap.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace enda::parallel

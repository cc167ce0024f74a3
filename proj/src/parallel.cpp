#include "enda/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace enda::parallel {

int thread_cap() {
  static const int cap = [] {
    const char* env = std::getenv("ENSEMBLE_DA_THREADS");
    if (env == nullptr) return 1;
    const int v = std::atoi(env);
    return v >= 1 ? v : 1;
  }();
  return cap;
}

void parallel_for(int n, const std::function<void(int)>& fn) {
  const int cap = std::min(thread_cap(), n);
  if (cap <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(cap);
  const int chunk = (n + cap - 1) / cap;
  for (int w = 0; w < cap; ++w) {
    const int lo = w * chunk;
    const int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    workers.emplace_back([lo, hi, &fn] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : workers) t.join();
}

}  // namespace enda::parallel

#pragma once

#include <cstddef>
#include <functional>

namespace forgesr {

// Worker count used by parallel_for; 1 means run inline. Defaults to 1.
void set_worker_threads(int n);
int worker_threads();

// Runs body(i) for i in [0, n). Items must write disjoint outputs; the
// result is independent of the worker count. The first exception thrown by
// any item is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace forgesr

#pragma once

#include <functional>

namespace degctrl {

/// Worker count used by parallel_for (default 1). Results never depend on it:
/// every task writes only to its own slot.
void set_num_threads(int n);
int num_threads();

/// Runs f(0), ..., f(count-1), possibly concurrently. The first exception
/// thrown by any task is rethrown after all workers finish.
void parallel_for(int count, const std::function<void(int)>& f);

}  // namespace degctrl

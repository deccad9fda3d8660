#pragma once

#include <cstddef>
#include <functional>

namespace rect2 {

// Thread count from set_threads, else RECT2_THREADS, else hardware concurrency.
int thread_count();
void set_threads(int n);

// Runs f(i) for i in [0, n) on up to thread_count() threads. Work is split in
// contiguous blocks so results written by index are deterministic. The first
// exception thrown by any worker is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f);

}  // namespace rect2

#pragma once

#include <cstddef>
#include <functional>

namespace trackmine {

// Worker cap shared by all stages (the CLI's --jobs). 0 means hardware concurrency.
void set_max_jobs(std::size_t jobs);
std::size_t max_jobs();

// Splits [0, n) into contiguous chunks and runs body(begin, end) on up to max_jobs()
// threads. Chunk boundaries depend only on n and the worker count; callers must
// write to disjoint outputs so the result is independent of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace trackmine

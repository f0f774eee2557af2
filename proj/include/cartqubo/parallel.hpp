#pragma once

#include <cstddef>
#include <functional>

namespace cartqubo {

/// Worker threads used by the library. Defaults to the CARTQUBO_THREADS
/// environment variable, else 1. Results never depend on this value.
std::size_t thread_count();
void set_thread_count(std::size_t n);

/// Runs body(i) for i in [0, count) on up to thread_count() threads.
/// Exceptions from workers are rethrown (lowest index first).
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace cartqubo

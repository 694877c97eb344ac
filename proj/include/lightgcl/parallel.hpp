// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace lightgcl {

// Worker count used by row-parallel kernels. Initialised from the THREADS
// environment variable, falling back to the hardware concurrency.
std::size_t thread_count();
void set_thread_count(std::size_t n);

// Splits [0, n) into contiguous chunks, one per worker, and calls
// fn(begin, end) on each. Every output row must be owned by exactly one
// chunk, so results do not depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace lightgcl

#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace proxlmc {

// Worker count: PROXLMC_THREADS if set (>= 1, oversubscription allowed),
// else hardware concurrency.
std::size_t worker_count();

// Calls body(begin, end) over disjoint chunks of [0, n). Chunks run
// concurrently; the first exception thrown is rethrown in the caller.
void parallel_for_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)> &body);

}  // namespace proxlmc

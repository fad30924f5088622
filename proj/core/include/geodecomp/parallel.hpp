#pragma once

#include <cstddef>
#include <functional>

namespace geodecomp {

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Work is handed out by
/// index, so callers that write results into slot i get output independent
/// of the job count. The first exception thrown is rethrown after all
/// threads join. jobs = 0 means hardware concurrency.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

/// jobs resolved against hardware concurrency (at least 1).
std::size_t resolve_jobs(std::size_t jobs);

}  // namespace geodecomp

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace dsvd {

/// Number of workers for a requested count: 0 means hardware concurrency,
/// and the DSVD_THREADS environment variable applies when `requested` is 0.
std::size_t resolve_threads(std::size_t requested);

/// Runs body(i) for i in [0, count) on up to `threads` workers. Each index
/// runs exactly once; if any throw, the exception of the lowest index is
/// rethrown after all workers finish.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body);

}  // namespace dsvd

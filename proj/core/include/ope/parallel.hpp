#pragma once

#include <cstdint>
#include <functional>

namespace ope {

/// Number of workers to use: `requested` if positive, otherwise the
/// OPE_ABSORB_THREADS environment variable if set, otherwise the hardware
/// concurrency. Always at least 1.
int resolve_threads(int requested = 0);

/// Runs body(chunk_index) for chunk_index in [0, chunk_count) on up to
/// `threads` workers. Chunk indices are handed out atomically; the caller is
/// responsible for making per-chunk results independent of scheduling (each
/// chunk writes only its own slot). Exceptions from workers are rethrown.
void parallel_chunks(std::int64_t chunk_count, int threads,
                     const std::function<void(std::int64_t)>& body);

}  // namespace ope

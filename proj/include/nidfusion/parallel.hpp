#pragma once

#include <cstddef>
#include <functional>

namespace nidfusion::parallel {

/// Worker count used by the renderer and histogram builder. 0 restores the
/// default (hardware concurrency). Results never depend on this value.
void set_thread_count(unsigned count);
unsigned thread_count();
unsigned hardware_threads();

/// Splits [0, n) into `chunks` contiguous ranges and calls
/// fn(chunk_index, begin, end) for each, one thread per chunk. Chunk
/// boundaries depend only on n and chunks.
void for_chunks(std::size_t n, unsigned chunks,
                const std::function<void(unsigned, std::size_t, std::size_t)>& fn);

/// Chunk count to use for n items: min(thread_count(), n), at least 1.
unsigned chunks_for(std::size_t n);

}  // namespace nidfusion::parallel

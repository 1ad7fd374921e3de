#pragma once

#include <cstddef>
#include <functional>

namespace termweight {

/// Caps worker threads for all parallel loops. 0 selects the hardware count.
void set_thread_count(std::size_t n);
std::size_t thread_count();

/// Calls fn(chunk, begin, end) for every fixed-size chunk of [0, n).
///
/// Chunk boundaries depend only on `n` and `chunk_size`, never on the thread
/// count, so callers that keep one partial result per chunk and reduce them in
/// chunk order get bit-identical results at any thread count.
void parallel_chunks(std::size_t n, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

inline std::size_t chunk_count(std::size_t n, std::size_t chunk_size) {
  return (n + chunk_size - 1) / chunk_size;
}

}  // namespace termweight

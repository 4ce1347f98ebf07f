#pragma once

// Chunked data-parallel loops with a fixed decomposition.
//
// Work is split into chunks whose boundaries depend only on the problem size,
// never on the thread count. Each chunk owns an RNG stream derived from
// (seed, stream, chunk) and writes to its own slot; callers then reduce the
// slots in chunk order. The parallel and serial drivers therefore produce
// bitwise-identical results.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace svtp::parallel {

inline constexpr std::size_t kDefaultChunk = 4096;

using Rng = std::mt19937_64;

inline Rng chunk_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t chunk) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(chunk), static_cast<std::uint32_t>(chunk >> 32)};
  return Rng(seq);
}

inline std::size_t num_chunks(std::size_t n, std::size_t chunk) {
  return (n + chunk - 1) / chunk;
}

enum class Exec { Parallel, Serial };

/// Calls body(chunk_index, begin, end) for every chunk of [0, n).
template <class Body>
void for_chunks(std::size_t n, std::size_t chunk, Exec exec, Body&& body) {
  const auto count = static_cast<std::ptrdiff_t>(num_chunks(n, chunk));
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t c = 0; c < count; ++c) {
      const auto begin = static_cast<std::size_t>(c) * chunk;
      body(static_cast<std::size_t>(c), begin, std::min(n, begin + chunk));
    }
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < count; ++c) {
    const auto begin = static_cast<std::size_t>(c) * chunk;
    body(static_cast<std::size_t>(c), begin, std::min(n, begin + chunk));
  }
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace svtp::parallel

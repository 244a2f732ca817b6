#pragma once

#include <cstddef>
#include <functional>

namespace hmmrates {

// Worker cap shared by every parallel loop in the library. Results never
// depend on it: all randomness is keyed per item, and reductions run serially.
void set_num_threads(int threads);
int num_threads();

// Calls fn(i) for i in [begin, end), statically chunked over the workers.
void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& fn);

}  // namespace hmmrates

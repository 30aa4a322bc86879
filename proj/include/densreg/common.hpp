#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace densreg {

// One scalar precision throughout; fields never mix precisions. File payloads
// declared as f32 are widened to Real on read.
using Real = double;

// Invalid inputs: mismatched grids, bad preconditions, malformed files.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Algorithmic breakdown: folds (non-positive Jacobian), NaN energies.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Worker-thread cap from DENSREG_THREADS (0 or unset = hardware concurrency).
inline int max_worker_threads() {
  static const int cached = [] {
    int n = 0;
    if (const char* env = std::getenv("DENSREG_THREADS")) {
      n = std::atoi(env);
    }
    if (n <= 0) {
      n = static_cast<int>(std::thread::hardware_concurrency());
    }
    return n > 0 ? n : 1;
  }();
  return cached;
}

// Runs fn(begin, end) over a partition of [0, n). Chunks write disjoint output
// slots, so results are identical for any thread count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const int threads = max_worker_threads();
  if (threads <= 1 || n < 4096) {
    fn(std::size_t{0}, n);
    return;
  }
  const std::size_t chunks = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  pool.reserve(chunks);
  const std::size_t per = (n + chunks - 1) / chunks;
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t lo = c * per;
    const std::size_t hi = std::min(n, lo + per);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace densreg

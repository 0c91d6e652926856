#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <boost/random/normal_distribution.hpp>

namespace chaosx {

using Rng = std::mt19937_64;

namespace num {

inline constexpr double kPi = 3.14159265358979323846;

// Standard normal upper tail Psi(x) = P(N(0,1) > x).
double normal_tail(double x);
double normal_pdf(double x);

// SplitMix64 finalizer; used to derive independent child seeds.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t index = 0);

// Ziggurat N(0,1) draws from a 64-bit engine.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : rng_(seed) {}
  double operator()() { return dist_(rng_); }
  void fill(double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = dist_(rng_);
  }
  Rng& engine() { return rng_; }

 private:
  Rng rng_;
  boost::random::normal_distribution<double> dist_;
};

// Adaptive Gauss-Kronrod on [a, b]; b may be +infinity.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-10, double* abs_error = nullptr);

// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

// Worker count used when a caller passes 0.
unsigned default_threads();

// Runs fn(state, block, begin, end) for every block of `block_size` items.
// Results are returned in block order, so any reduction over them is
// independent of the number of workers.
template <class Result, class MakeState, class Fn>
std::vector<Result> run_blocks(std::size_t n_items, std::size_t block_size,
                               unsigned threads, MakeState make_state, Fn fn) {
  if (block_size == 0) block_size = 1;
  const std::size_t n_blocks = (n_items + block_size - 1) / block_size;
  std::vector<Result> out(n_blocks);
  if (n_blocks == 0) return out;
  if (threads == 0) threads = default_threads();
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_blocks));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    try {
      auto state = make_state();
      for (;;) {
        const std::size_t b = next.fetch_add(1);
        if (b >= n_blocks) break;
        const std::size_t begin = b * block_size;
        const std::size_t end = std::min(n_items, begin + block_size);
        out[b] = fn(state, b, begin, end);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(n_blocks);
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace num
}  // namespace chaosx

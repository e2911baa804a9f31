#pragma once

// Counter-based random numbers (Philox4x32-10). Every draw is a pure function of
// (seed, stream, counter), so any noise sample can be regenerated in isolation.

#include <array>
#include <cstdint>

namespace ssmlab {

using PhiloxBlock = std::array<std::uint32_t, 4>;

PhiloxBlock philox4x32(PhiloxBlock counter, std::array<std::uint32_t, 2> key) noexcept;

// Well-known stream tags so that independent consumers of one seed never collide.
enum class Stream : std::uint32_t {
  ProcessNoise = 1,
  ObservationNoise = 2,
  Inputs = 3,
  Init = 4,
  Shuffle = 5,
  Sampling = 6,
  Dataset = 7,
};

// Uniform in (0, 1) from the block addressed by (seed, stream, step, index).
double counter_uniform(std::uint64_t seed, Stream stream, std::uint64_t step, std::uint64_t index) noexcept;

// Standard normal via Box–Muller; components 2k and 2k+1 share one Philox block.
double counter_normal(std::uint64_t seed, Stream stream, std::uint64_t step, std::uint64_t index) noexcept;

// Sequential generator over a counter stream, for code that just needs "the next number".
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, Stream stream, std::uint64_t substream = 0) noexcept
      : seed_(seed), stream_(stream), substream_(substream) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept;
  double uniform() noexcept;                      // (0, 1)
  double uniform(double lo, double hi) noexcept;  // (lo, hi)
  double normal() noexcept;
  std::uint64_t below(std::uint64_t n) noexcept;  // [0, n)

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  Stream stream_;
  std::uint64_t substream_;
  std::uint64_t counter_ = 0;
  PhiloxBlock block_{};
  int used_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ssmlab

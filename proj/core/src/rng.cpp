#include "ssmlab/rng.hpp"

#include <cmath>
#include <numbers>

namespace ssmlab {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// 53-bit uniform strictly inside (0, 1).
inline double to_open01(std::uint32_t hi, std::uint32_t lo) noexcept {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

PhiloxBlock block_for(std::uint64_t seed, Stream stream, std::uint64_t step, std::uint64_t index) noexcept {
  const PhiloxBlock ctr{static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
                        static_cast<std::uint32_t>(index),
                        static_cast<std::uint32_t>(stream) << 24 ^ static_cast<std::uint32_t>(index >> 32)};
  return philox4x32(ctr, {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
}

}  // namespace

PhiloxBlock philox4x32(PhiloxBlock c, std::array<std::uint32_t, 2> k) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

double counter_uniform(std::uint64_t seed, Stream stream, std::uint64_t step, std::uint64_t index) noexcept {
  const PhiloxBlock b = block_for(seed, stream, step, index);
  return to_open01(b[0], b[1]);
}

double counter_normal(std::uint64_t seed, Stream stream, std::uint64_t step, std::uint64_t index) noexcept {
  const PhiloxBlock b = block_for(seed, stream, step, index / 2);
  const double u1 = to_open01(b[0], b[1]);
  const double u2 = to_open01(b[2], b[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return (index % 2 == 0) ? r * std::cos(angle) : r * std::sin(angle);
}

void CounterRng::refill() noexcept {
  block_ = block_for(seed_, stream_, substream_, counter_++);
  used_ = 0;
}

CounterRng::result_type CounterRng::operator()() noexcept {
  if (used_ > 2) refill();
  const std::uint64_t v = (static_cast<std::uint64_t>(block_[used_]) << 32) | block_[used_ + 1];
  used_ += 2;
  return v;
}

double CounterRng::uniform() noexcept {
  const std::uint64_t v = (*this)();
  return (static_cast<double>(v >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

double CounterRng::normal() noexcept {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(angle);
  have_spare_ = true;
  return r * std::cos(angle);
}

std::uint64_t CounterRng::below(std::uint64_t n) noexcept {
  if (n <= 1) return 0;
  // rejection to avoid modulo bias
  const std::uint64_t limit = max() - max() % n;
  std::uint64_t v;
  do {
    v = (*this)();
  } while (v >= limit);
  return v % n;
}

}  // namespace ssmlab

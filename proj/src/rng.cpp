#include "qregress/rng.hpp"

namespace qregress {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

inline std::uint64_t join(std::uint32_t hi, std::uint32_t lo) noexcept {
  return (static_cast<std::uint64_t>(hi) << 32) | lo;
}

}  // namespace

PhiloxBlock philox4x32_10(PhiloxBlock ctr, PhiloxKey key) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double to_open_unit(std::uint64_t bits) noexcept {
  // 52 random bits, offset by half a step so 0 and 1 are never produced.
  // With 53 bits the top value 1 - 2^-54 would round up to 1.
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

CounterRng::CounterRng(RngSeed seed, RngDomain domain) noexcept : seed_(seed) {
  const std::uint64_t k =
      splitmix64(seed.base_seed ^ splitmix64(static_cast<std::uint64_t>(domain)));
  key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

PhiloxBlock CounterRng::block(std::uint64_t draw, std::uint32_t sub) const noexcept {
  const PhiloxBlock ctr = {
      static_cast<std::uint32_t>(draw),
      static_cast<std::uint32_t>((draw >> 32) & 0xFFFFu) | (sub << 16),
      static_cast<std::uint32_t>(seed_.stream_index),
      static_cast<std::uint32_t>(seed_.stream_index >> 32),
  };
  return philox4x32_10(ctr, key_);
}

double CounterRng::uniform(std::uint64_t draw) const noexcept {
  const auto b = block(draw, 0);
  return to_open_unit(join(b[0], b[1]));
}

double VariateStream::next_uniform() noexcept {
  if (pos_ == 2) {
    cache_ = rng_.block(draw_, sub_++);
    pos_ = 0;
  }
  const int i = 2 * pos_++;
  return to_open_unit(join(cache_[i], cache_[i + 1]));
}

}  // namespace qregress

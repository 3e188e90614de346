#pragma once

// Counter-based random numbers. Every variate is a pure function of
// (base_seed, stream_index, draw_index), so replications can run on any
// worker in any order and still reproduce bit-for-bit.

#include <array>
#include <cstdint>

namespace qregress {

struct RngSeed {
  std::uint64_t base_seed = 0;
  std::uint64_t stream_index = 0;

  friend bool operator==(const RngSeed&, const RngSeed&) = default;
};

// Separates independent consumers sharing one seed (eigenvalue draws must
// not reuse the uniforms that feed the error terms).
enum class RngDomain : std::uint32_t {
  eigen_sampling = 1,
  errors = 2,
  constants = 3,
  operator_generation = 4,
  user = 5,
};

using PhiloxBlock = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

// Philox4x32 with 10 rounds.
PhiloxBlock philox4x32_10(PhiloxBlock counter, PhiloxKey key) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

class CounterRng {
 public:
  CounterRng(RngSeed seed, RngDomain domain) noexcept;

  // Raw 128-bit block for sub-block `sub` of variate `draw` (draw < 2^48).
  PhiloxBlock block(std::uint64_t draw, std::uint32_t sub) const noexcept;

  // Uniform on the open interval (0, 1).
  double uniform(std::uint64_t draw) const noexcept;

  RngSeed seed() const noexcept { return seed_; }

 private:
  RngSeed seed_;
  PhiloxKey key_;
};

// Successive open-interval uniforms belonging to a single variate, for
// samplers that consume a variable number of uniforms (rejection).
class VariateStream {
 public:
  VariateStream(const CounterRng& rng, std::uint64_t draw) noexcept : rng_(rng), draw_(draw) {}

  double next_uniform() noexcept;

 private:
  const CounterRng& rng_;
  std::uint64_t draw_;
  std::uint32_t sub_ = 0;
  int pos_ = 2;
  PhiloxBlock cache_{};
};

double to_open_unit(std::uint64_t bits) noexcept;

}  // namespace qregress

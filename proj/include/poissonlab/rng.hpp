#pragma once

#include <cstdint>

#include "poissonlab/common.hpp"

namespace plab {

// Purpose tags keep streams for different estimators disjoint even when they
// share (seed, replicate, cell).
enum class StreamPurpose : std::uint32_t {
  simulate = 1,
  inner = 2,
  outer_mean = 3,
  tilt_extra = 4,
  tilt_thin = 5,
  optimizer = 6,
  optimal_control = 7,
  bootstrap = 8,
  test = 9,
};

struct StreamKey {
  std::uint64_t seed = 0;
  StreamPurpose purpose = StreamPurpose::test;
  std::uint64_t replicate = 0;
  std::uint64_t cell = 0;
};

// Counter-based stream (Philox 4x32-10). A stream is a pure function of its
// key, so results do not depend on scheduling or worker count.
class Rng {
 public:
  explicit Rng(const StreamKey& key);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  // Uniform on [0,1) with 53 random bits.
  double uniform01();
  double uniform(double lo, double hi);
  // Unit-rate exponential.
  double exponential();
  // Exact Poisson sample via exponential spacings.
  std::uint64_t poisson(double mean);

 private:
  void refill();
  std::uint32_t key_[2];
  std::uint32_t ctr_[4];
  std::uint32_t block_[4];
  int have_ = 0;
};

// Raw Philox 4x32-10 block function, exposed for known-answer tests.
void philox4x32_10(const std::uint32_t ctr[4], const std::uint32_t key[2], std::uint32_t out[4]);

}  // namespace plab

#include "poissonlab/rng.hpp"

#include <cmath>

namespace plab {

namespace {
constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void round_once(std::uint32_t c[4], const std::uint32_t k[2]) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  const std::uint32_t n0 = hi1 ^ c[1] ^ k[0];
  const std::uint32_t n1 = lo1;
  const std::uint32_t n2 = hi0 ^ c[3] ^ k[1];
  const std::uint32_t n3 = lo0;
  c[0] = n0;
  c[1] = n1;
  c[2] = n2;
  c[3] = n3;
}
}  // namespace

void philox4x32_10(const std::uint32_t ctr[4], const std::uint32_t key[2], std::uint32_t out[4]) {
  std::uint32_t c[4] = {ctr[0], ctr[1], ctr[2], ctr[3]};
  std::uint32_t k[2] = {key[0], key[1]};
  for (int r = 0; r < 10; ++r) {
    round_once(c, k);
    k[0] += kW0;
    k[1] += kW1;
  }
  out[0] = c[0];
  out[1] = c[1];
  out[2] = c[2];
  out[3] = c[3];
}

Rng::Rng(const StreamKey& key) {
  key_[0] = static_cast<std::uint32_t>(key.seed & 0xFFFFFFFFu);
  key_[1] = static_cast<std::uint32_t>(key.seed >> 32);
  ctr_[0] = 0;  // block counter
  ctr_[1] = static_cast<std::uint32_t>(key.replicate & 0xFFFFFFFFu);
  ctr_[2] = static_cast<std::uint32_t>(key.cell & 0xFFFFFFFFu);
  ctr_[3] = static_cast<std::uint32_t>(key.purpose) ^
            (static_cast<std::uint32_t>(key.replicate >> 32) << 8) ^
            (static_cast<std::uint32_t>(key.cell >> 32) << 16);
  have_ = 0;
}

void Rng::refill() {
  philox4x32_10(ctr_, key_, block_);
  ++ctr_[0];
  have_ = 4;
}

std::uint32_t Rng::next_u32() {
  if (have_ == 0) refill();
  return block_[--have_];
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t hi = next_u32();
  const std::uint64_t lo = next_u32();
  return (hi << 32) | lo;
}

double Rng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

double Rng::exponential() { return -std::log1p(-uniform01()); }

std::uint64_t Rng::poisson(double mean) {
  if (!(mean >= 0.0)) throw ParameterError("poisson: mean must be nonnegative");
  if (mean == 0.0) return 0;
  std::uint64_t n = 0;
  double acc = exponential();
  while (acc <= mean) {
    ++n;
    acc += exponential();
  }
  return n;
}

}  // namespace plab

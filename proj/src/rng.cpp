#include "bdsim/rng.hpp"

#include <cmath>
#include <numbers>

#include "bdsim/error.hpp"

namespace bdsim {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline Philox4x32::Counter round(const Philox4x32::Counter& c, const Philox4x32::Key& k) {
  std::uint32_t hi0, lo0, hi1, lo1;
  mulhilo(kMul0, c[0], hi0, lo0);
  mulhilo(kMul1, c[2], hi1, lo1);
  return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

Philox4x32::Counter Philox4x32::encrypt(Counter ctr, Key key) noexcept {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    ctr = round(ctr, key);
  }
  return ctr;
}

RandomStream::RandomStream(const RngStreamKey& key) {
  if (key.trajectory >> 32) throw Error(ErrorCode::InvalidArgument, "trajectory id exceeds 32 bits");
  if (key.counter >> 56) throw Error(ErrorCode::InvalidArgument, "stream counter exceeds 56 bits");
  key_ = {static_cast<std::uint32_t>(key.master_seed), static_cast<std::uint32_t>(key.master_seed >> 32)};
  counter_ = {0u, static_cast<std::uint32_t>(key.counter),
              (static_cast<std::uint32_t>(key.channel) << 24) | static_cast<std::uint32_t>(key.counter >> 32),
              static_cast<std::uint32_t>(key.trajectory)};
}

void RandomStream::refill() {
  block_ = Philox4x32::encrypt(counter_, key_);
  ++counter_[0];
  used_ = 0;
}

std::uint32_t RandomStream::next_u32() {
  if (used_ == 4) refill();
  return block_[used_++];
}

std::uint64_t RandomStream::next_u64() {
  const std::uint64_t hi = next_u32();
  return (hi << 32) | next_u32();
}

double RandomStream::uniform_open() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

std::size_t RandomStream::index(std::size_t n) {
  auto i = static_cast<std::size_t>(uniform_open() * static_cast<double>(n));
  return i < n ? i : n - 1;
}

double RandomStream::exponential(double rate) { return -std::log(uniform_open()) / rate; }

double RandomStream::standard_normal() {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform_open()));
  const double phi = 2.0 * std::numbers::pi * uniform_open();
  spare_normal_ = r * std::sin(phi);
  has_spare_normal_ = true;
  return r * std::cos(phi);
}

}  // namespace bdsim

#pragma once

// Counter-based random streams. A draw is a pure function of
// (master_seed, trajectory, channel, counter, position-in-stream), so streams
// can be created anywhere, in any order, on any thread.

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>

namespace bdsim {

/// Philox4x32-10 block function.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter encrypt(Counter ctr, Key key) noexcept;
};

enum class Channel : std::uint32_t {
  Race = 0,        // inter-event time and birth/death selection
  DeathRace = 1,   // victim selection
  Location = 2,    // birth placement
  Acceptance = 3,  // thinning marks in coupled runs
  Initial = 4,     // random initial configurations
  Auxiliary = 5,   // anything else (probe sampling in checks)
};

struct RngStreamKey {
  std::uint64_t master_seed = 0;
  std::uint64_t trajectory = 0;  // must fit in 32 bits
  Channel channel = Channel::Race;
  std::uint64_t counter = 0;     // must fit in 56 bits; the simulator uses the event number

  RngStreamKey with(Channel c, std::uint64_t n) const noexcept { return {master_seed, trajectory, c, n}; }
  RngStreamKey for_trajectory(std::uint64_t t) const noexcept { return {master_seed, t, channel, counter}; }

  friend auto operator<=>(const RngStreamKey&, const RngStreamKey&) = default;
};

class RandomStream {
 public:
  explicit RandomStream(const RngStreamKey& key);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform_open();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_open(); }
  /// Uniform index in [0, n). n must be positive.
  std::size_t index(std::size_t n);
  double exponential(double rate);
  double standard_normal();

 private:
  void refill();

  Philox4x32::Counter counter_{};
  Philox4x32::Key key_{};
  Philox4x32::Counter block_{};
  unsigned used_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace bdsim

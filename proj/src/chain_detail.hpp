#pragma once

#include <cstring>
#include <span>
#include <unordered_set>
#include <vector>

#include "bdsim/config_space.hpp"
#include "bdsim/error.hpp"
#include "bdsim/rate_models.hpp"
#include "bdsim/rng.hpp"

namespace bdsim::detail {

/// Exact-bit set of occupied positions.
class PositionIndex {
 public:
  explicit PositionIndex(const Configuration& eta) {
    for (std::size_t i = 0; i < eta.size(); ++i) insert(eta.position(i));
  }
  bool contains(std::span<const double> x) const { return set_.count(Point(x.begin(), x.end())) != 0; }
  void insert(std::span<const double> x) { set_.emplace(x.begin(), x.end()); }
  void erase(std::span<const double> x) { set_.erase(Point(x.begin(), x.end())); }

 private:
  struct Hash {
    std::size_t operator()(const Point& p) const noexcept {
      std::uint64_t h = 1469598103934665603ull;
      for (double c : p) {
        std::uint64_t bits;
        std::memcpy(&bits, &c, sizeof bits);
        h = (h ^ bits) * 1099511628211ull;
        h ^= h >> 29;
      }
      return static_cast<std::size_t>(h);
    }
  };
  std::unordered_set<Point, Hash> set_;
};

/// Samples a birth location, redrawing while it lands on an occupied position.
template <class Occupied>
Point place_birth(const RateModel& model, const Configuration& eta, RandomStream& rng, Occupied&& occupied) {
  constexpr int kMaxCollisions = 1000;
  for (int attempt = 0; attempt < kMaxCollisions; ++attempt) {
    Point x = sample_birth_location(model, eta, rng);
    if (!occupied(std::span<const double>(x))) return x;
  }
  throw Error(ErrorCode::Intractable, "birth placement keeps colliding with existing particles");
}

/// Index i with probability weights[i] / sum, using u in (0, 1).
inline std::size_t pick_weighted(std::span<const double> weights, double u) {
  double total = 0.0;
  for (double w : weights) total += w;
  const double target = u * total;
  double acc = 0.0;
  std::size_t last_positive = weights.size();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (target < acc) return i;
  }
  return last_positive;  // rounding at the top end
}

}  // namespace bdsim::detail

#pragma once

// Finite configurations in R^d, persistent particle labels and the
// configuration-space metric.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace bdsim {

using Point = std::vector<double>;
using ParticleId = std::int64_t;

struct Particle {
  ParticleId id = 0;
  Point position;
};

/// Lexicographic order on R^d. Throws on dimension mismatch.
std::strong_ordering lex_compare(std::span<const double> a, std::span<const double> b);

/// A finite simple point configuration with persistent particle labels.
///
/// Coordinates are stored contiguously; slot order is the insertion order and
/// is meaningful to the simulator (victim search walks slots in order).
class Configuration {
 public:
  explicit Configuration(std::size_t dimension);

  /// Validates distinct ids, distinct finite positions and dimensions.
  Configuration(std::size_t dimension, std::vector<Particle> particles);

  /// Labels the points 0, -1, ..., -(n-1) in lexicographic order and stores
  /// them in that order.
  static Configuration from_points(std::size_t dimension, std::span<const Point> points);

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }

  std::span<const double> position(std::size_t slot) const {
    return {coords_.data() + slot * dimension_, dimension_};
  }
  ParticleId id(std::size_t slot) const { return ids_[slot]; }
  Point point(std::size_t slot) const;
  std::vector<Particle> particles() const;
  std::span<const ParticleId> ids() const noexcept { return ids_; }

  std::optional<std::size_t> find_id(ParticleId id) const;
  std::optional<std::size_t> find_position(std::span<const double> x) const;

  /// Appends a particle; throws if the id or position is already present.
  void insert(ParticleId id, std::span<const double> x);
  /// Appends without the O(n) uniqueness scan. Callers keep their own index.
  void insert_unchecked(ParticleId id, std::span<const double> x);
  void erase_slot(std::size_t slot);
  void erase_id(ParticleId id);

  /// Same (id, position) pairs irrespective of slot order.
  bool same_labeled_set(const Configuration& other) const;
  /// Every (id, position) of *this occurs in other.
  bool is_subset_of(const Configuration& other) const;

  friend bool operator==(const Configuration& a, const Configuration& b) {
    return a.dimension_ == b.dimension_ && a.ids_ == b.ids_ && a.coords_ == b.coords_;
  }

 private:
  std::size_t dimension_;
  std::vector<ParticleId> ids_;
  std::vector<double> coords_;
};

/// Labels of the related sequence: initial particles carry 0, -1, ..., births
/// receive 1, 2, ... in order of appearance. Labels are never reused.
class ParticleRegistry {
 public:
  ParticleRegistry() = default;
  explicit ParticleRegistry(const Configuration& initial);

  ParticleId next_birth_index() const noexcept { return next_; }
  ParticleId issue() noexcept { return next_++; }

 private:
  ParticleId next_ = 1;
};

struct Matching {
  double distance = 0.0;                // sqrt of the optimal squared cost
  std::vector<std::size_t> assignment;  // slot i of the first set -> slot of the second
};

/// Minimum-cost perfect matching under squared Euclidean cost.
/// Throws if the cardinalities differ.
Matching optimal_matching(const Configuration& zeta, const Configuration& eta);

/// min over permutations of sqrt(sum |x_i - y_sigma(i)|^2).
double euclidean_matching_distance(const Configuration& zeta, const Configuration& eta);

/// The bounded metric: 1 if cardinalities differ, else min(1, matching distance).
double dist(const Configuration& zeta, const Configuration& eta);

/// Smallest pairwise distance among points in the closed ball B_radius(0);
/// +infinity when fewer than two points lie inside.
double min_pair_separation(const Configuration& gamma, double radius);

/// gamma(B_n(0)) + 1/delta(gamma, B_n(0)), with 1/infinity taken as 0.
double compactness_statistic(const Configuration& gamma, double n);

/// Radial weight phi(|x|).
using RadialWeight = std::function<double(double)>;

double default_psi_weight(double r);

/// Sum over ordered pairs x != y of phi(x) phi(y) (|x-y| + 1) / |x-y|.
double psi_functional(const Configuration& gamma, const RadialWeight& phi = default_psi_weight);

double euclidean_norm(std::span<const double> x);
double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace bdsim

#include "bdsim/config_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "bdsim/assignment.hpp"
#include "bdsim/error.hpp"

namespace bdsim {

namespace {

void require_same_dimension(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + ": dimension mismatch (" +
                                                  std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

void require_finite(std::span<const double> x) {
  for (double c : x) {
    if (!std::isfinite(c)) throw Error(ErrorCode::InvalidArgument, "point has a non-finite coordinate");
  }
}

}  // namespace

std::strong_ordering lex_compare(std::span<const double> a, std::span<const double> b) {
  require_same_dimension(a.size(), b.size(), "lex_compare");
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] < b[k]) return std::strong_ordering::less;
    if (a[k] > b[k]) return std::strong_ordering::greater;
  }
  return std::strong_ordering::equal;
}

double euclidean_norm(std::span<const double> x) {
  double s = 0.0;
  for (double c : x) s += c * c;
  return std::sqrt(s);
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    s += diff * diff;
  }
  return s;
}

Configuration::Configuration(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) throw Error(ErrorCode::InvalidArgument, "dimension must be positive");
}

Configuration::Configuration(std::size_t dimension, std::vector<Particle> particles) : Configuration(dimension) {
  ids_.reserve(particles.size());
  coords_.reserve(particles.size() * dimension);
  for (const auto& p : particles) {
    require_same_dimension(p.position.size(), dimension, "Configuration");
    require_finite(p.position);
    ids_.push_back(p.id);
    coords_.insert(coords_.end(), p.position.begin(), p.position.end());
  }

  std::vector<std::size_t> order(size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return lex_compare(position(i), position(j)) < 0; });
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (lex_compare(position(order[k - 1]), position(order[k])) == 0) {
      throw Error(ErrorCode::InvalidArgument, "configuration has duplicate positions");
    }
  }
  std::vector<ParticleId> sorted_ids = ids_;
  std::sort(sorted_ids.begin(), sorted_ids.end());
  if (std::adjacent_find(sorted_ids.begin(), sorted_ids.end()) != sorted_ids.end()) {
    throw Error(ErrorCode::InvalidArgument, "configuration has duplicate particle ids");
  }
}

Configuration Configuration::from_points(std::size_t dimension, std::span<const Point> points) {
  std::vector<Point> sorted(points.begin(), points.end());
  for (const auto& p : sorted) require_same_dimension(p.size(), dimension, "from_points");
  std::sort(sorted.begin(), sorted.end(), [](const Point& a, const Point& b) { return lex_compare(a, b) < 0; });
  std::vector<Particle> particles;
  particles.reserve(sorted.size());
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    particles.push_back({-static_cast<ParticleId>(k), std::move(sorted[k])});
  }
  return Configuration(dimension, std::move(particles));
}

Point Configuration::point(std::size_t slot) const {
  auto x = position(slot);
  return Point(x.begin(), x.end());
}

std::vector<Particle> Configuration::particles() const {
  std::vector<Particle> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back({ids_[i], point(i)});
  return out;
}

std::optional<std::size_t> Configuration::find_id(ParticleId id) const {
  auto it = std::find(ids_.begin(), ids_.end(), id);
  if (it == ids_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - ids_.begin());
}

std::optional<std::size_t> Configuration::find_position(std::span<const double> x) const {
  require_same_dimension(x.size(), dimension_, "find_position");
  for (std::size_t i = 0; i < size(); ++i) {
    auto p = position(i);
    if (std::equal(p.begin(), p.end(), x.begin())) return i;
  }
  return std::nullopt;
}

void Configuration::insert(ParticleId id, std::span<const double> x) {
  require_same_dimension(x.size(), dimension_, "insert");
  require_finite(x);
  if (find_id(id)) throw Error(ErrorCode::InvalidArgument, "particle id " + std::to_string(id) + " already present");
  if (find_position(x)) throw Error(ErrorCode::InvalidArgument, "position already occupied");
  insert_unchecked(id, x);
}

void Configuration::insert_unchecked(ParticleId id, std::span<const double> x) {
  ids_.push_back(id);
  coords_.insert(coords_.end(), x.begin(), x.end());
}

void Configuration::erase_slot(std::size_t slot) {
  ids_.erase(ids_.begin() + static_cast<std::ptrdiff_t>(slot));
  auto first = coords_.begin() + static_cast<std::ptrdiff_t>(slot * dimension_);
  coords_.erase(first, first + static_cast<std::ptrdiff_t>(dimension_));
}

void Configuration::erase_id(ParticleId id) {
  auto slot = find_id(id);
  if (!slot) throw Error(ErrorCode::Precondition, "particle id " + std::to_string(id) + " is not alive");
  erase_slot(*slot);
}

bool Configuration::is_subset_of(const Configuration& other) const {
  if (dimension_ != other.dimension_) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    auto slot = other.find_id(ids_[i]);
    if (!slot) return false;
    auto a = position(i);
    auto b = other.position(*slot);
    if (!std::equal(a.begin(), a.end(), b.begin())) return false;
  }
  return true;
}

bool Configuration::same_labeled_set(const Configuration& other) const {
  return size() == other.size() && is_subset_of(other);
}

ParticleRegistry::ParticleRegistry(const Configuration& initial) {
  for (ParticleId id : initial.ids()) next_ = std::max(next_, id + 1);
}

Matching optimal_matching(const Configuration& zeta, const Configuration& eta) {
  require_same_dimension(zeta.dimension(), eta.dimension(), "optimal_matching");
  const std::size_t n = zeta.size();
  if (eta.size() != n) throw Error(ErrorCode::Precondition, "optimal_matching: cardinalities differ");

  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = squared_distance(zeta.position(i), eta.position(j));
  }
  Matching m;
  m.assignment = solve_assignment(cost, n);
  // Matched pair costs are summed in ascending order: the value then depends
  // only on the matching, not on the solver's dual updates or argument order.
  std::vector<double> pairs(n);
  for (std::size_t i = 0; i < n; ++i) pairs[i] = cost[i * n + m.assignment[i]];
  std::sort(pairs.begin(), pairs.end());
  double total = 0.0;
  for (double c : pairs) total += c;
  m.distance = std::sqrt(total);
  return m;
}

double euclidean_matching_distance(const Configuration& zeta, const Configuration& eta) {
  return optimal_matching(zeta, eta).distance;
}

double dist(const Configuration& zeta, const Configuration& eta) {
  require_same_dimension(zeta.dimension(), eta.dimension(), "dist");
  if (zeta.size() != eta.size()) return 1.0;
  return std::min(1.0, euclidean_matching_distance(zeta, eta));
}

double min_pair_separation(const Configuration& gamma, double radius) {
  std::vector<std::size_t> inside;
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    if (euclidean_norm(gamma.position(i)) <= radius) inside.push_back(i);
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < inside.size(); ++a) {
    for (std::size_t b = a + 1; b < inside.size(); ++b) {
      best = std::min(best, std::sqrt(squared_distance(gamma.position(inside[a]), gamma.position(inside[b]))));
    }
  }
  return best;
}

double compactness_statistic(const Configuration& gamma, double n) {
  double count = 0.0;
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    if (euclidean_norm(gamma.position(i)) <= n) count += 1.0;
  }
  const double sep = min_pair_separation(gamma, n);
  return count + (std::isinf(sep) ? 0.0 : 1.0 / sep);
}

double default_psi_weight(double r) { return std::exp(-r); }

double psi_functional(const Configuration& gamma, const RadialWeight& phi) {
  const std::size_t n = gamma.size();
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = phi(euclidean_norm(gamma.position(i)));
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r = std::sqrt(squared_distance(gamma.position(i), gamma.position(j)));
      total += 2.0 * w[i] * w[j] * (r + 1.0) / r;
    }
  }
  return total;
}

}  // namespace bdsim

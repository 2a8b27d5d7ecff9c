#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "bdsim/assignment.hpp"
#include "bdsim/config_space.hpp"
#include "bdsim/error.hpp"
#include "oracles.hpp"

using namespace bdsim;

namespace {

Configuration line(std::initializer_list<double> xs) {
  std::vector<Point> pts;
  for (double x : xs) pts.push_back({x});
  return Configuration::from_points(1, pts);
}

std::vector<Point> random_points(std::mt19937_64& gen, std::size_t n, std::size_t d, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<Point> pts(n, Point(d));
  for (auto& p : pts)
    for (auto& c : p) c = u(gen);
  return pts;
}

}  // namespace

TEST_CASE("lex_compare orders by first differing coordinate") {
  CHECK(lex_compare(Point{0, 0}, Point{0, 1}) < 0);
  CHECK(lex_compare(Point{1, 0}, Point{1, 0}) == 0);
  CHECK(lex_compare(Point{2, -5}, Point{1, 100}) > 0);
  CHECK_THROWS_AS(lex_compare(Point{1}, Point{1, 2}), Error);
}

TEST_CASE("configuration invariants") {
  CHECK_THROWS_AS(Configuration::from_points(1, std::vector<Point>{{0.5}, {0.5}}), Error);
  CHECK_THROWS_AS(Configuration(1, {{1, {0.0}}, {1, {2.0}}}), Error);
  CHECK_THROWS_AS(Configuration::from_points(1, std::vector<Point>{{std::nan("")}}), Error);
  CHECK_THROWS_AS(Configuration::from_points(2, std::vector<Point>{{1.0}}), Error);

  auto c = line({0.0, 1.0});
  CHECK_THROWS_AS(c.insert(5, Point{1.0}), Error);
  CHECK_THROWS_AS(c.insert(0, Point{3.0}), Error);
  c.insert(5, Point{3.0});
  CHECK(c.size() == 3);
}

TEST_CASE("initial particles are labelled 0, -1, ... in lexicographic order") {
  auto c = Configuration::from_points(2, std::vector<Point>{{1, 0}, {0, 5}, {0, -1}, {-3, 2}});
  REQUIRE(c.size() == 4);
  CHECK(c.id(0) == 0);
  CHECK(c.point(0) == Point{-3, 2});
  CHECK(c.id(1) == -1);
  CHECK(c.point(1) == Point{0, -1});
  CHECK(c.id(2) == -2);
  CHECK(c.point(2) == Point{0, 5});
  CHECK(c.id(3) == -3);
  CHECK(c.point(3) == Point{1, 0});

  ParticleRegistry reg(c);
  CHECK(reg.issue() == 1);
  CHECK(reg.issue() == 2);
  c.insert(7, Point{9, 9});
  CHECK(ParticleRegistry(c).next_birth_index() == 8);
}

TEST_CASE("dist examples") {
  CHECK(dist(line({0, 1}), line({0.5, 1})) == 0.5);
  auto eta = line({0.3, -2, 7});
  CHECK(dist(eta, eta) == 0.0);
  CHECK(dist(line({0, 1}), line({0, 1, 2})) == 1.0);
  CHECK(dist(line({0}), line({5})) == 1.0);  // capped
  CHECK_THROWS_AS(dist(line({0}), Configuration::from_points(2, std::vector<Point>{{0, 0}})), Error);
}

TEST_CASE("euclidean_matching_distance examples") {
  CHECK(euclidean_matching_distance(line({0.25}), line({-1})) == 1.25);
  CHECK(euclidean_matching_distance(line({0, 10}), line({10, 0})) == 0.0);
  CHECK_THROWS_AS(euclidean_matching_distance(line({0}), line({0, 1})), Error);
  CHECK(euclidean_matching_distance(Configuration(3), Configuration(3)) == 0.0);
}

TEST_CASE("assignment equals the exhaustive permutation minimum") {
  std::mt19937_64 gen(20240611);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + trial % 7;
    const std::size_t d = 1 + trial % 3;
    auto a = random_points(gen, n, d, 2.0);
    auto b = random_points(gen, n, d, 2.0);
    const auto oracle_result = oracle::brute_force_matching(a, b);
    // Configurations reorder points lexicographically, so match on the stored order.
    auto ca = Configuration::from_points(d, a);
    auto cb = Configuration::from_points(d, b);
    std::vector<Point> sa, sb;
    for (std::size_t i = 0; i < n; ++i) {
      sa.push_back(ca.point(i));
      sb.push_back(cb.point(i));
    }
    const auto stored_oracle = oracle::brute_force_matching(sa, sb);
    const auto m = optimal_matching(ca, cb);
    CHECK(m.distance == stored_oracle.distance);
    CHECK(m.assignment == stored_oracle.perm);
    CHECK(m.distance == doctest::Approx(oracle_result.distance).epsilon(1e-12));
  }
}

TEST_CASE("six-point instance agrees with the 720-permutation oracle") {
  std::mt19937_64 gen(6);
  auto a = Configuration::from_points(2, random_points(gen, 6, 2));
  auto b = Configuration::from_points(2, random_points(gen, 6, 2));
  std::vector<Point> sa, sb;
  for (std::size_t i = 0; i < 6; ++i) {
    sa.push_back(a.point(i));
    sb.push_back(b.point(i));
  }
  CHECK(euclidean_matching_distance(a, b) == oracle::brute_force_matching(sa, sb).distance);
}

TEST_CASE("solve_assignment rejects malformed input and handles trivial sizes") {
  CHECK(solve_assignment({}, 0).empty());
  std::vector<double> one{3.0};
  CHECK(solve_assignment(one, 1) == std::vector<std::size_t>{0});
  std::vector<double> bad{1, 2, 3};
  CHECK_THROWS_AS(solve_assignment(bad, 2), Error);
}

TEST_CASE("dist is a metric on random equal-cardinality triples") {
  std::mt19937_64 gen(99);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 1 + trial % 8;
    const std::size_t d = 1 + trial % 2;
    // Small scale keeps most distances below the cap of 1.
    auto a = Configuration::from_points(d, random_points(gen, n, d, 0.3));
    auto b = Configuration::from_points(d, random_points(gen, n, d, 0.3));
    auto c = Configuration::from_points(d, random_points(gen, n, d, 0.3));
    const double ab = dist(a, b), bc = dist(b, c), ac = dist(a, c);
    CHECK(ab == dist(b, a));
    CHECK(dist(a, a) == 0.0);
    CHECK(ab > 0.0);
    CHECK(ac <= ab + bc + 1e-12);
  }
}

TEST_CASE("adding or removing a common far point keeps dist when the oracle pairs it with itself") {
  std::mt19937_64 gen(7);
  int confirmed = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 5;
    auto a = random_points(gen, n, 2, 0.2);
    auto b = random_points(gen, n, 2, 0.2);
    const Point far{10.0 + trial, -4.0};
    auto a_plus = a, b_plus = b;
    a_plus.push_back(far);
    b_plus.push_back(far);
    const auto m = oracle::brute_force_matching(a_plus, b_plus);
    if (m.perm[n] != n) continue;
    ++confirmed;
    const auto za = Configuration::from_points(2, a), zb = Configuration::from_points(2, b);
    const auto pa = Configuration::from_points(2, a_plus), pb = Configuration::from_points(2, b_plus);
    CHECK(dist(pa, pb) == doctest::Approx(dist(za, zb)).epsilon(1e-14));

    auto ra = pa, rb = pb;
    ra.erase_slot(*ra.find_position(far));
    rb.erase_slot(*rb.find_position(far));
    CHECK(dist(ra, rb) == doctest::Approx(dist(pa, pb)).epsilon(1e-14));
  }
  CHECK(confirmed > 150);
}

TEST_CASE("min_pair_separation examples") {
  CHECK(std::isinf(min_pair_separation(line({0, 3}), 1.0)));
  CHECK(min_pair_separation(line({0, 0.2, 0.9}), 1.0) == 0.2);
  CHECK(std::isinf(min_pair_separation(Configuration(2), 1.0)));
}

TEST_CASE("compactness_statistic examples and monotonicity in n") {
  CHECK(compactness_statistic(Configuration(1), 1) == 0.0);
  CHECK(compactness_statistic(line({0, 0.5}), 1) == 4.0);
  CHECK(compactness_statistic(line({0, 2}), 1) == 1.0);

  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 100; ++trial) {
    auto g = Configuration::from_points(2, random_points(gen, 12, 2, 6.0));
    double prev = 0.0;
    for (int n = 1; n <= 10; ++n) {
      const double s = compactness_statistic(g, n);
      CHECK(s >= prev);
      prev = s;
    }
  }
}

TEST_CASE("psi_functional examples") {
  CHECK(psi_functional(Configuration(1)) == 0.0);
  CHECK(psi_functional(line({4.0})) == 0.0);
  CHECK(psi_functional(line({0, 1})) == doctest::Approx(4.0 / std::exp(1.0)).epsilon(1e-15));
  CHECK(psi_functional(line({0, 1})) == doctest::Approx(1.4715177646857693).epsilon(1e-15));

  // The far point contributes 2 * sum_y phi(y) phi(50) (|y-50|+1)/|y-50|, computed in extended precision.
  long double extra = 0.0L;
  for (long double y : {0.0L, 1.0L}) {
    const long double r = 50.0L - y;
    extra += 2.0L * std::exp(-std::fabs(y)) * std::exp(-50.0L) * (r + 1.0L) / r;
  }
  const long double base = 4.0L / std::exp(1.0L);
  CHECK(static_cast<double>(extra / base) < 1e-18);
  const double with_far = psi_functional(line({0, 1, 50}));
  CHECK(std::abs(with_far - psi_functional(line({0, 1}))) / psi_functional(line({0, 1})) < 1e-18);
}

TEST_CASE("psi_functional does not depend on storage order") {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 100; ++trial) {
    auto pts = random_points(gen, 7, 2, 2.0);
    std::vector<Particle> forward, reversed;
    for (std::size_t i = 0; i < pts.size(); ++i) forward.push_back({static_cast<ParticleId>(i), pts[i]});
    reversed.assign(forward.rbegin(), forward.rend());
    const double a = psi_functional(Configuration(2, forward));
    const double b = psi_functional(Configuration(2, reversed));
    CHECK(a == doctest::Approx(b).epsilon(1e-13));
  }
}

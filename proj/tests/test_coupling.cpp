#include <doctest.h>

#include <cmath>

#include "bdsim/analysis.hpp"
#include "bdsim/coupling.hpp"
#include "bdsim/error.hpp"

using namespace bdsim;

namespace {

RngStreamKey key_for(std::uint64_t seed, std::uint64_t traj) { return {seed, traj, Channel::Race, 0}; }

Configuration spread(std::size_t n, double step = 0.41) {
  std::vector<Point> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back({step * static_cast<double>(i), 0.1 * static_cast<double>(i % 3)});
  return Configuration::from_points(2, pts);
}

RateModel contact_death(double lambda) {
  return RateModel::contact(lambda, Kernel::uniform_ball(1.0)) + RateModel::constant_death(1.0);
}

// Structural check at every event time of either copy.
bool nested_everywhere(const CoupledPair& p) {
  std::vector<double> times;
  for (const auto& e : p.lower.events) times.push_back(e.time);
  for (const auto& e : p.upper.events) times.push_back(e.time);
  const double limit = p.upper.capped() ? p.upper.status.time : p.upper.horizon;
  for (double t : times) {
    if (t >= limit) continue;
    if (!state_at(p.lower, t).is_subset_of(state_at(p.upper, t))) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("check_monotone_premise") {
  const Box box{{-2, -2}, {2, 2}};
  const RngStreamKey key{5, 0, Channel::Auxiliary, 0};
  CHECK(check_monotone_premise(contact_death(1), contact_death(1), 300, 8, key, box).passed);
  CHECK(check_monotone_premise(contact_death(1), contact_death(2), 300, 8, key, box).passed);

  const auto inverted = check_monotone_premise(contact_death(2), contact_death(1), 300, 8, key, box);
  CHECK_FALSE(inverted.passed);
  CHECK(inverted.failed_inequality == "birth");
  CHECK(inverted.lhs > inverted.rhs);

  const auto lower = RateModel::contact(1.0, Kernel::uniform_ball(1.0)) + RateModel::constant_death(1.0);
  const auto upper = RateModel::contact(1.0, Kernel::uniform_ball(1.0)) + RateModel::pairwise_death(0.5, 1.0, 1.0);
  const auto report = check_monotone_premise(lower, upper, 300, 8, key, box);
  REQUIRE_FALSE(report.passed);
  CHECK(report.failed_inequality == "death");
  REQUIRE(report.witness_lower.has_value());
  REQUIRE(report.witness_upper.has_value());
  CHECK(report.witness_lower->is_subset_of(*report.witness_upper));
  // Re-evaluate the witness directly: d1 at the lower state is below d2 at the upper state.
  CHECK(death_rate(lower, report.witness_point, *report.witness_lower) <
        death_rate(upper, report.witness_point, *report.witness_upper));
  CHECK_FALSE(report.describe().empty());
}

TEST_CASE("self-coupling replays the standalone simulator") {
  const auto m = contact_death(1.2);
  for (int i = 0; i < 50; ++i) {
    const auto eta0 = spread(6);
    const auto pair = simulate_coupled(m, m, eta0, eta0, 2.0, Caps{}, key_for(1, i));
    const auto alone = simulate(m, eta0, 2.0, Caps{}, key_for(1, i));
    CHECK(pair.lower.events == pair.upper.events);
    CHECK(pair.upper.events == alone.events);
    CHECK(pair.upper.status == alone.status);
    CHECK(pair.inclusion_held());
  }
}

TEST_CASE("no births below: lower is the upper log without births") {
  const auto lower_model = RateModel::constant_death(1.0);
  const auto upper_model = contact_death(1.5);
  for (int i = 0; i < 100; ++i) {
    const auto eta0 = spread(5);
    const auto pair = simulate_coupled(lower_model, upper_model, eta0, eta0, 3.0, Caps{}, key_for(2, i));
    std::vector<Event> expected;
    for (const auto& e : pair.upper.events)
      if (e.kind == EventKind::Death && e.id <= 0) expected.push_back(e);
    CHECK(pair.lower.events == expected);
    CHECK(pair.inclusion_held());
    CHECK(check_event_log(pair.lower).empty());
    CHECK(check_event_log(pair.upper).empty());
  }
}

TEST_CASE("contact(1) under contact(2): inclusion and marginals") {
  const auto m1 = contact_death(1.0), m2 = contact_death(2.0);
  const auto eta0 = spread(4);
  std::vector<double> lower1, upper1, alone_lower, alone_upper;
  for (int i = 0; i < 2000; ++i) {
    const auto pair = simulate_coupled(m1, m2, eta0, eta0, 1.0, Caps{}, key_for(3, i));
    REQUIRE(pair.inclusion_held());
    REQUIRE(pair.audit.size() >= pair.upper.events.size());
    if (i < 200) REQUIRE(nested_everywhere(pair));
    lower1.push_back(static_cast<double>(state_at(pair.lower, 1.0).size()));
    upper1.push_back(static_cast<double>(state_at(pair.upper, 1.0).size()));
    REQUIRE(lower1.back() <= upper1.back());
    alone_lower.push_back(static_cast<double>(state_at(simulate(m1, eta0, 1.0, Caps{}, key_for(4, i)), 1.0).size()));
    alone_upper.push_back(static_cast<double>(state_at(simulate(m2, eta0, 1.0, Caps{}, key_for(5, i)), 1.0).size()));
  }
  CHECK(two_sample_ks(lower1, alone_lower).passes_001());
  CHECK(two_sample_ks(upper1, alone_upper).passes_001());
  const auto l = summarize(lower1), sl = summarize(alone_lower);
  CHECK(std::abs(l.estimate - sl.estimate) <= 3 * std::hypot(l.standard_error, sl.standard_error));
}

TEST_CASE("strictly nested initial states") {
  const auto upper0 = spread(6);
  std::vector<Point> sub{upper0.point(1), upper0.point(4)};
  const auto lower0 = Configuration::from_points(2, sub);
  const auto [l, u] = nest_initial(lower0, upper0);
  CHECK(l.is_subset_of(u));
  for (int i = 0; i < 100; ++i) {
    const auto pair = simulate_coupled(contact_death(1), contact_death(2), lower0, upper0, 1.0, Caps{}, key_for(6, i));
    CHECK(pair.inclusion_held());
    CHECK(pair.lower.initial == l);
  }
  const auto stray = Configuration::from_points(2, std::vector<Point>{{9.0, 9.0}});
  CHECK_THROWS_AS(nest_initial(stray, upper0), Error);
}

TEST_CASE("runtime premise violation is reported") {
  const auto eta0 = spread(5);
  try {
    for (int i = 0; i < 20; ++i) simulate_coupled(contact_death(2), contact_death(1), eta0, eta0, 2.0, Caps{}, key_for(7, i));
    FAIL("expected a premise violation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PremiseViolation);
  }
}

TEST_CASE("coupled runs are reproducible") {
  const auto eta0 = spread(5);
  const auto a = simulate_coupled(contact_death(1), contact_death(2), eta0, eta0, 2.0, Caps{}, key_for(8, 3));
  const auto b = simulate_coupled(contact_death(1), contact_death(2), eta0, eta0, 2.0, Caps{}, key_for(8, 3));
  CHECK(a.lower == b.lower);
  CHECK(a.upper == b.upper);
  CHECK(a.audit == b.audit);
}

TEST_CASE("match_labels carries alpha's labels through the optimal matching") {
  const auto alpha = Configuration::from_points(1, std::vector<Point>{{0.0}, {1.0}, {2.0}});
  const auto moved = Configuration::from_points(1, std::vector<Point>{{2.01}, {-0.01}, {1.02}});
  const auto labelled = match_labels(alpha, moved);
  REQUIRE(labelled.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(labelled.id(i) == alpha.id(i));
    CHECK(std::abs(labelled.position(i)[0] - alpha.position(i)[0]) < 0.05);
  }
  CHECK_THROWS_AS(match_labels(alpha, Configuration::from_points(1, std::vector<Point>{{0.0}})), Error);
}

TEST_CASE("continuity experiment: zero perturbation and small displacement") {
  const auto model = contact_death(1.0);
  const auto alpha = spread(5);
  const std::vector<double> eps{0.1};

  const auto same = continuity_experiment(model, alpha, {alpha}, 1.0, 200, key_for(9, 0), eps);
  REQUIRE(same.size() == 1);
  CHECK(same[0].displacement_scale == 0.0);
  CHECK(same[0].exceedance[0] == 0.0);
  CHECK(same[0].mean_sup_dist == 0.0);

  std::vector<Point> shifted;
  for (std::size_t i = 0; i < alpha.size(); ++i) shifted.push_back({alpha.position(i)[0] + 1e-6, alpha.position(i)[1]});
  const auto rows = continuity_experiment(model, alpha, {Configuration::from_points(2, shifted)}, 1.0, 500,
                                          key_for(9, 1), eps);
  CHECK(rows[0].displacement_scale == doctest::Approx(1e-6));
  CHECK(rows[0].exceedance[0] < 0.05);

  const auto bad = Configuration::from_points(2, std::vector<Point>{{0, 0}});
  CHECK_THROWS_AS(continuity_experiment(model, alpha, {bad}, 1.0, 10, key_for(9, 2), eps), Error);
}

TEST_CASE("sup_distance") {
  const auto traj = simulate(contact_death(1), spread(4), 1.0, Caps{}, key_for(10, 0));
  CHECK(sup_distance(traj, traj) == 0.0);
  const auto other = simulate(contact_death(1), spread(4), 1.0, Caps{}, key_for(10, 1));
  const double d = sup_distance(traj, other);
  CHECK(d >= 0.0);
  CHECK(d <= 1.0);
}

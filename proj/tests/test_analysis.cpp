#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bdsim/analysis.hpp"
#include "bdsim/error.hpp"
#include "oracles.hpp"

using namespace bdsim;

namespace {

RngStreamKey key_for(std::uint64_t seed, std::uint64_t traj = 0) { return {seed, traj, Channel::Race, 0}; }

Configuration spread(std::size_t n, std::size_t d = 1, double step = 0.37) {
  std::vector<Point> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back(Point(d, step * static_cast<double>(i)));
  return Configuration::from_points(d, pts);
}

RateModel contact_death() {
  return RateModel::contact(1.0, Kernel::uniform_ball(1.0)) + RateModel::constant_death(1.0);
}

// Death part of the generator straight from the formula.
double death_part(const RateModel& m, const TestFunction& f, const Configuration& eta) {
  double s = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) {
    auto minus = eta;
    minus.erase_slot(i);
    s += death_rate(m, eta.position(i), eta) * (f(minus) - f(eta));
  }
  return s;
}

}  // namespace

TEST_CASE("Lf(size) is B - D on random states") {
  std::vector<RateModel> models{contact_death(),
                                RateModel::contact(0.7, Kernel::gaussian(0.5)) + RateModel::pairwise_death(0.2, 0.4, 1.0),
                                RateModel::immigration(3.0, Box::unit(1)) + RateModel::constant_death(0.3)};
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-3, 3);
  const auto f = TestFunction::size();
  for (int trial = 0; trial < 10000; ++trial) {
    const auto& m = models[trial % models.size()];
    std::vector<Point> pts(trial % 9);
    for (auto& p : pts) p = {u(gen)};
    const auto eta = Configuration::from_points(1, pts);
    CHECK(generator_apply(m, f, eta).value == cumulative_birth_rate(m, eta) - cumulative_death_rate(m, eta));
  }
}

TEST_CASE("capped_size and indicator generators match the formula") {
  const auto m = RateModel::contact(1.3, Kernel::uniform_ball(1.0)) + RateModel::pairwise_death(0.5, 0.2, 1.0);
  const std::size_t K = 4;
  for (const auto& f : {TestFunction::capped_size(K), TestFunction::indicator_leq(K)}) {
    for (std::size_t n = 0; n <= K + 2; ++n) {
      const auto eta = spread(n);
      const double B = cumulative_birth_rate(m, eta);
      auto plus = eta;
      plus.insert(999, Point{100.0});
      const double expected = B * (f(plus) - f(eta)) + death_part(m, f, eta);
      CHECK(generator_apply(m, f, eta).value == doctest::Approx(expected).epsilon(1e-14));
    }
  }
  // |eta| = K: no birth gain, each death drops the count by one.
  const auto eta = spread(K);
  CHECK(generator_apply(m, TestFunction::capped_size(K), eta).value ==
        doctest::Approx(-cumulative_death_rate(m, eta)).epsilon(1e-14));
}

TEST_CASE("soft_count generator against dense-grid integration in one dimension") {
  const auto f = TestFunction::soft_count();
  const auto eta = Configuration::from_points(1, std::vector<Point>{{-0.4}, {0.9}});
  for (const auto& k : {Kernel::uniform_ball(1.0), Kernel::gaussian(0.6)}) {
    const auto m = RateModel::contact(1.5, k) + RateModel::constant_death(1.0);
    auto integrand = [&](double x) { return birth_rate(m, std::vector<double>{x}, eta) * std::exp(-x * x); };
    double birth = 0.0;
    if (k.shape == Kernel::Shape::UniformBall) {
      // Split at every ball edge.
      const std::vector<double> cuts{-1.4, -0.1, 0.6, 1.9};
      for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        birth += oracle::simpson(integrand, cuts[i] + 1e-13, cuts[i + 1] - 1e-13, 20000);
    } else {
      birth = oracle::simpson(integrand, -12, 12, 100000);
    }
    const double expected = birth + death_part(m, f, eta);
    CHECK(generator_apply(m, f, eta).value == doctest::Approx(expected).epsilon(1e-4));
    QuadratureSpec adaptive;
    adaptive.method = QuadratureSpec::Method::Adaptive;
    CHECK(generator_apply(m, f, eta, adaptive).value == doctest::Approx(expected).epsilon(1e-4));
  }
}

TEST_CASE("soft_count generator in two dimensions") {
  const auto f = TestFunction::soft_count();
  const auto eta = Configuration::from_points(2, std::vector<Point>{{0.3, -0.2}, {1.1, 0.5}});

  // Uniform ball: polar coordinates around each parent keep the integrand smooth.
  const auto ball = RateModel::contact(1.0, Kernel::uniform_ball(1.0));
  double ball_birth = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) {
    const double cx = eta.position(i)[0], cy = eta.position(i)[1];
    ball_birth += oracle::simpson(
        [&](double r) {
          return r * oracle::simpson(
                         [&](double th) {
                           const double x = cx + r * std::cos(th), y = cy + r * std::sin(th);
                           return std::exp(-x * x - y * y) / std::numbers::pi;
                         },
                         0, 2 * std::numbers::pi, 400);
        },
        0, 1, 400);
  }
  CHECK(generator_apply(ball, f, eta).value == doctest::Approx(ball_birth).epsilon(1e-6));

  // Box: separable erf product.
  const double half_sqrt_pi = std::sqrt(std::numbers::pi) / 2;
  const double box_birth = 2.0 / 3.0 * half_sqrt_pi * (std::erf(2.0) + std::erf(1.0)) * half_sqrt_pi * std::erf(1.0);
  CHECK(generator_apply(RateModel::immigration(2.0, Box{{-1, 0}, {2, 1}}), f, eta).value ==
        doctest::Approx(box_birth).epsilon(1e-9));

  // Smooth kernel: plain nested Simpson.
  {
    const auto m = RateModel::contact(1.0, Kernel::gaussian(0.7));
    auto inner = [&](double x) {
      return oracle::simpson(
          [&](double y) { return birth_rate(m, std::vector<double>{x, y}, eta) * std::exp(-x * x - y * y); }, -6, 6,
          1200);
    };
    const double birth = oracle::simpson(inner, -6, 6, 1200);
    CHECK(generator_apply(m, f, eta).value == doctest::Approx(birth).epsilon(1e-6));
  }
}

TEST_CASE("custom test functions by quadrature and by Monte Carlo") {
  const auto m = RateModel::contact(2.0, Kernel::gaussian(0.5)) + RateModel::constant_death(1.0);
  const auto f = TestFunction::from_function("sum_sq", [](const Configuration& eta) {
    double s = 0.0;
    for (std::size_t i = 0; i < eta.size(); ++i) s += eta.position(i)[0] * eta.position(i)[0];
    return s;
  });
  const auto eta = Configuration::from_points(1, std::vector<Point>{{-1.0}, {0.5}});
  // Each offspring of y has E x^2 = y^2 + sigma^2.
  const double birth = 2.0 * ((1.0 + 0.25) + (0.25 + 0.25));
  const double expected = birth + death_part(m, f, eta);
  CHECK(generator_apply(m, f, eta).value == doctest::Approx(expected).epsilon(1e-6));

  QuadratureSpec mc;
  mc.method = QuadratureSpec::Method::MonteCarlo;
  mc.mc_samples = 20000;
  mc.key = key_for(3);
  const auto v = generator_apply(m, f, eta, mc);
  CHECK(v.standard_error > 0.0);
  CHECK(std::abs(v.value - expected) <= 4 * v.standard_error);
}

TEST_CASE("integrated generator is unchanged by refining the intervals") {
  const auto m = contact_death();
  for (int i = 0; i < 20; ++i) {
    const auto traj = simulate(m, spread(5), 1.0, Caps{}, key_for(4, i));
    for (const auto& f : {TestFunction::soft_count(), TestFunction::capped_size(50), TestFunction::size()}) {
      const double coarse = integrated_generator(m, f, traj, 1.0, 1);
      const double fine = integrated_generator(m, f, traj, 1.0, 2);
      CHECK(fine == doctest::Approx(coarse).epsilon(1e-12));
    }
  }
}

TEST_CASE("integrated generator of size sums (B - D) over constancy intervals") {
  const auto m = contact_death();
  const auto traj = simulate(m, spread(5), 1.0, Caps{}, key_for(5));
  double expected = 0.0, from = 0.0;
  auto state = traj.initial;
  for (const auto& e : traj.events) {
    if (e.time > 1.0) break;
    expected += (cumulative_birth_rate(m, state) - cumulative_death_rate(m, state)) * (e.time - from);
    apply_event(state, e);
    from = e.time;
  }
  expected += (cumulative_birth_rate(m, state) - cumulative_death_rate(m, state)) * (1.0 - from);
  CHECK(integrated_generator(m, TestFunction::size(), traj, 1.0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("martingale residuals") {
  const auto frozen = martingale_residual(RateModel("zero", {}, {}), TestFunction::size(), spread(4), 1.0, 100, key_for(6));
  CHECK(frozen.estimate == 0.0);
  CHECK(frozen.standard_error == 0.0);

  const auto m = contact_death();
  const auto eta0 = spread(10);
  for (const auto& f : {TestFunction::capped_size(50), TestFunction::soft_count(), TestFunction::indicator_leq(12)}) {
    const auto r = martingale_residual(m, f, eta0, 1.0, 10000, key_for(7));
    CHECK(r.n_samples == 10000);
    CHECK(std::abs(r.estimate) <= 3 * r.standard_error);
  }
  const auto size_report = martingale_residual(m, TestFunction::size(), eta0, 1.0, 10000, key_for(8));
  CHECK(std::abs(size_report.estimate) <= 3 * size_report.standard_error);
  CHECK(std::abs(size_report.test_statistics.at("mean_increment") - size_report.test_statistics.at("mean_integral")) <=
        3 * size_report.standard_error);
}

TEST_CASE("semigroup estimates") {
  const auto m = contact_death();
  const auto alpha = spread(20);
  const auto at_zero = semigroup_estimate(m, TestFunction::soft_count(), alpha, 0.0, 10, key_for(9));
  CHECK(at_zero.estimate == TestFunction::soft_count()(alpha));
  CHECK(at_zero.standard_error == 0.0);

  const auto constant = TestFunction::from_function("const", [](const Configuration&) { return 2.5; }, 2.5);
  const auto c = semigroup_estimate(m, constant, alpha, 1.0, 100, key_for(10));
  CHECK(c.estimate == 2.5);
  CHECK(c.standard_error == 0.0);

  const auto death = semigroup_estimate(RateModel::constant_death(1.0), TestFunction::size(), alpha, 1.0, 10000, key_for(11));
  CHECK(std::abs(death.estimate - 20.0 / std::numbers::e) <= 3 * death.standard_error);

  const auto balanced = semigroup_estimate(m, TestFunction::size(), spread(10), 1.0, 10000, key_for(12));
  CHECK(std::abs(balanced.estimate - 10.0) <= 3 * balanced.standard_error);
}

TEST_CASE("generator limit") {
  const auto frozen = generator_limit_check(RateModel("zero", {}, {}), TestFunction::size(), spread(3), {0.1, 0.01}, 50,
                                            key_for(13));
  for (const auto& row : frozen) {
    CHECK(row.quotient == 0.0);
    CHECK(row.generator == 0.0);
  }
  const auto m = RateModel::contact(2.0, Kernel::uniform_ball(1.0)) + RateModel::constant_death(1.0);
  const auto rows = generator_limit_check(m, TestFunction::size(), spread(10), {0.5, 0.1, 0.05, 0.01}, 20000, key_for(14));
  REQUIRE(rows.size() == 4);
  CHECK(rows[3].generator == doctest::Approx(10.0));
  CHECK(rows[3].gap <= std::max(3 * rows[3].standard_error, 0.05 * std::abs(rows[3].generator) + 0.01));
  CHECK_THROWS_AS(generator_limit_check(m, TestFunction::size(), spread(3), {0.1, 0.5}, 10, key_for(15)), Error);
}

TEST_CASE("mean size curves") {
  const auto yule = RateModel::size_power_birth(1.0, 1.0, Box::unit(1));
  const auto curve = mean_size_curve(yule, spread(5), {0.5, 1.0}, 10000, key_for(16));
  for (const auto& p : curve) {
    CHECK(std::abs(p.report.estimate - yule_mean(5, 1.0, p.t)) <= 3 * p.report.standard_error);
    CHECK(p.within_bound);
  }
  const auto death = mean_size_curve(RateModel::constant_death(1.0) + RateModel::immigration(0.0, Box::unit(1)),
                                     spread(5), {1.0}, 10000, key_for(17));
  CHECK(std::abs(death[0].report.estimate - 5.0 / std::numbers::e) <= 3 * death[0].report.standard_error);
  CHECK_THROWS_AS(mean_size_curve(RateModel::superlinear_birth(1.0, 2.0, Box::unit(1)), spread(2), {1.0}, 10, key_for(18)),
                  Error);
}

TEST_CASE("one-sample KS against the exponential law") {
  RandomStream rng(key_for(19));
  std::vector<double> xs(10000);
  for (auto& x : xs) x = rng.exponential(2.0);
  const auto ok = ks_exponential(xs, 2.0);
  CHECK(ok.passes_001());
  CHECK(ok.threshold_001 == doctest::Approx(0.01949));
  CHECK(ok.threshold_05 == doctest::Approx(0.01358));
  CHECK_FALSE(ks_exponential(xs, 4.0).passes_001());
  CHECK_THROWS_AS(ks_exponential({}, 1.0), Error);
  CHECK_THROWS_AS(ks_exponential(std::vector<double>(50, 1.0), 1.0), Error);
  auto with_zero = xs;
  with_zero[3] = 0.0;
  CHECK_THROWS_AS(ks_exponential(with_zero, 2.0), Error);
}

TEST_CASE("two-sample KS") {
  RandomStream rng(key_for(20));
  std::vector<double> a(500);
  for (auto& x : a) x = rng.uniform_open();
  CHECK(two_sample_ks(a, a).statistic == 0.0);
  CHECK_THROWS_AS(two_sample_ks(a, std::vector<double>(10, 0.5)), Error);

  const auto eta0 = spread(5);
  std::vector<double> low, low2, high;
  const auto m1 = contact_death();
  const auto m2 = RateModel::contact(2.0, Kernel::uniform_ball(1.0)) + RateModel::constant_death(1.0);
  for (int i = 0; i < 2000; ++i) {
    low.push_back(static_cast<double>(state_at(simulate(m1, eta0, 1.0, Caps{}, key_for(21, i)), 1.0).size()));
    low2.push_back(static_cast<double>(state_at(simulate(m1, eta0, 1.0, Caps{}, key_for(22, i)), 1.0).size()));
    high.push_back(static_cast<double>(state_at(simulate(m2, eta0, 1.0, Caps{}, key_for(23, i)), 1.0).size()));
  }
  CHECK(two_sample_ks(low, low2).passes_001());
  CHECK_FALSE(two_sample_ks(low, high).passes_001());
}

TEST_CASE("summarize") {
  const auto r = summarize({1.0, 2.0, 3.0, 4.0});
  CHECK(r.estimate == 2.5);
  CHECK(r.standard_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK(r.n_samples == 4);
}

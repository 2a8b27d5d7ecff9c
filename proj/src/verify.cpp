#include "bdsim/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "bdsim/analysis.hpp"
#include "bdsim/coupling.hpp"
#include "bdsim/error.hpp"
#include "bdsim/parallel.hpp"

namespace bdsim {

using nlohmann::json;

namespace {

constexpr std::size_t kDim = 2;

RateModel contact_death(double lambda, Kernel k = Kernel::uniform_ball(1.0)) {
  return RateModel::contact(lambda, k) + RateModel::constant_death(1.0);
}

// n distinct points on a jittered grid in [0, 2]^2.
Configuration grid_start(std::size_t n, std::uint64_t seed) {
  RandomStream rng({seed, 0, Channel::Initial, 0});
  std::vector<Point> pts;
  const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  for (std::size_t i = 0; i < n; ++i) {
    const double x = 2.0 * (static_cast<double>(i % side) + rng.uniform(0.25, 0.75)) / static_cast<double>(side);
    const double y = 2.0 * (static_cast<double>(i / side) + rng.uniform(0.25, 0.75)) / static_cast<double>(side);
    pts.push_back({x, y});
  }
  return Configuration::from_points(kDim, pts);
}

RngStreamKey root(const VerifyOptions& o, std::uint64_t salt) { return {o.seed ^ (salt * 0x9e3779b97f4a7c15ULL), 0, Channel::Race, 0}; }

CheckResult make(const std::string& suite, const std::string& name, int criterion, double statistic, double threshold,
                 const std::string& relation) {
  CheckResult c{suite, name, criterion, statistic, threshold, relation, false, json::object()};
  if (relation == "<") c.passed = statistic < threshold;
  else if (relation == "<=") c.passed = statistic <= threshold;
  else if (relation == ">=") c.passed = statistic >= threshold;
  else c.passed = statistic == threshold;
  return c;
}

json report_json(const SimReport& r) {
  return {{"estimate", r.estimate}, {"standard_error", r.standard_error}, {"n_samples", r.n_samples}, {"excluded", r.excluded}};
}

// First jump from ten particles: exponential holding time and birth/death split.
std::vector<CheckResult> exponential_clocks(const VerifyOptions& o) {
  const auto model = contact_death(1.0);
  const auto eta = grid_start(10, o.seed);
  const double B = cumulative_birth_rate(model, eta), D = cumulative_death_rate(model, eta);
  const std::size_t n = 10000;
  std::vector<double> dt(n);
  std::vector<int> birth(n);
  const auto key = root(o, 1);
  parallel_for(n, o.jobs, [&](std::size_t i) {
    ParticleRegistry reg(eta);
    const auto ev = next_event(model, eta, reg, 0.0, key.for_trajectory(i));
    dt[i] = ev->time;
    birth[i] = ev->kind == EventKind::Birth;
  });
  const auto ks = ks_exponential(dt, B + D);
  auto c1 = make("exponential-clocks", "first_jump_ks_vs_exp(B+D)", 1, ks.statistic, ks.threshold_001, "<");
  c1.details = {{"rate", B + D}, {"n", n}, {"threshold_05", ks.threshold_05}};

  const double p = B / (B + D);
  const double freq = static_cast<double>(std::accumulate(birth.begin(), birth.end(), 0)) / n;
  const double sd = std::sqrt(p * (1 - p) / n);
  auto c2 = make("exponential-clocks", "birth_first_frequency", 2, std::abs(freq - p), 3 * sd, "<=");
  c2.details = {{"frequency", freq}, {"expected", p}, {"n", n}};
  return {c1, c2};
}

std::vector<CheckResult> yule(const VerifyOptions& o) {
  // b(x, eta) = |eta| on the unit square: every particle splits at rate 1.
  const auto model = RateModel::size_power_birth(1.0, 1.0, Box::unit(kDim));
  RandomStream rng({o.seed, 0, Channel::Initial, 1});
  const auto eta0 = random_configuration(5, Box::unit(kDim), rng);
  const auto r = semigroup_estimate(model, TestFunction::size(), eta0, 1.0, 10000, root(o, 3), {Caps{}, o.jobs, {}});
  const double target = yule_mean(5, 1.0, 1.0);
  auto c = make("yule", "mean_size_vs_5e", 3, std::abs(r.estimate - target), 3 * r.standard_error, "<=");
  c.details = report_json(r);
  c.details["expected"] = target;
  return {c};
}

std::vector<CheckResult> moment_bounds(const VerifyOptions& o) {
  const auto model = contact_death(1.0);
  const auto eta0 = grid_start(10, o.seed);
  const auto curve = mean_size_curve(model, eta0, {0.5, 1.0, 2.0}, 10000, root(o, 4), {Caps{}, o.jobs, {}});
  std::vector<CheckResult> out;
  for (const auto& p : curve) {
    const std::string t = std::to_string(p.t).substr(0, 3);
    auto b = make("moment-bounds", "mean_minus_3se_below_bound_t=" + t, 4, p.report.estimate - 3 * p.report.standard_error,
                  p.bound, "<=");
    b.details = report_json(p.report);
    b.details["margin"] = p.bound - (p.report.estimate - 3 * p.report.standard_error);
    out.push_back(b);
    auto ode = make("moment-bounds", "mean_matches_ode_t=" + t, 4, std::abs(p.report.estimate - 10.0),
                    3 * p.report.standard_error, "<=");
    ode.details = report_json(p.report);
    ode.details["expected"] = 10.0;
    out.push_back(ode);
  }
  return out;
}

std::vector<CheckResult> linear_death(const VerifyOptions& o) {
  const auto model = RateModel::constant_death(1.0);
  const auto eta0 = grid_start(20, o.seed);
  const auto key = root(o, 5);
  const std::size_t n = 10000;
  std::vector<double> size_at_1(n), extinction(n);
  parallel_for(n, o.jobs, [&](std::size_t i) {
    const auto traj = simulate(model, eta0, 1000.0, Caps{}, key.for_trajectory(i));
    size_at_1[i] = static_cast<double>(state_at(traj, 1.0).size());
    extinction[i] = traj.status.time;
  });
  const auto s = summarize(size_at_1), e = summarize(extinction);
  const double mean_target = 20.0 / std::numbers::e;
  double h20 = 0.0;
  for (int k = 1; k <= 20; ++k) h20 += 1.0 / k;
  auto c1 = make("linear-death", "mean_size_t=1_vs_20/e", 5, std::abs(s.estimate - mean_target), 3 * s.standard_error, "<=");
  c1.details = report_json(s);
  c1.details["expected"] = mean_target;
  auto c2 = make("linear-death", "extinction_time_vs_H20", 5, std::abs(e.estimate - h20), 3 * e.standard_error, "<=");
  c2.details = report_json(e);
  c2.details["expected"] = h20;
  return {c1, c2};
}

std::vector<CheckResult> coupling_suite(const VerifyOptions& o) {
  const auto m1 = contact_death(1.0), m2 = contact_death(2.0);
  const auto eta0 = grid_start(10, o.seed);
  const auto key = root(o, 6);
  const std::size_t n = 1000;
  const double t = 1.0;
  std::vector<double> lower(n), upper(n), alone1(n), alone2(n);
  std::vector<std::size_t> violations(n), events(n);
  parallel_for(n, o.jobs, [&](std::size_t i) {
    const auto pair = simulate_coupled(m1, m2, eta0, eta0, t, Caps{}, key.for_trajectory(i));
    violations[i] = static_cast<std::size_t>(
        std::count_if(pair.audit.begin(), pair.audit.end(), [](const AuditEntry& a) { return !a.inclusion; }));
    events[i] = pair.audit.size();
    lower[i] = static_cast<double>(state_at(pair.lower, t).size());
    upper[i] = static_cast<double>(state_at(pair.upper, t).size());
    alone1[i] = static_cast<double>(state_at(simulate(m1, eta0, t, Caps{}, key.for_trajectory(n + i)), t).size());
    alone2[i] = static_cast<double>(state_at(simulate(m2, eta0, t, Caps{}, key.for_trajectory(2 * n + i)), t).size());
  });
  const auto total_violations = std::accumulate(violations.begin(), violations.end(), std::size_t{0});
  auto c1 = make("coupling", "inclusion_violations", 6, static_cast<double>(total_violations), 0.0, "==");
  c1.details = {{"runs", n}, {"audited_events", std::accumulate(events.begin(), events.end(), std::size_t{0})}};
  const auto k1 = two_sample_ks(lower, alone1), k2 = two_sample_ks(upper, alone2);
  auto c2 = make("coupling", "lower_marginal_ks", 6, k1.statistic, k1.threshold_001, "<");
  auto c3 = make("coupling", "upper_marginal_ks", 6, k2.statistic, k2.threshold_001, "<");
  const auto premise = check_monotone_premise(m1, m2, 2000, 10, root(o, 7), Box{{-1, -1}, {3, 3}});
  auto c4 = make("coupling", "premise_check", 0, premise.passed ? 1.0 : 0.0, 1.0, "==");
  if (!premise.passed) c4.details = {{"witness", premise.describe()}};
  return {c1, c2, c3, c4};
}

std::vector<CheckResult> martingale(const VerifyOptions& o) {
  const auto model = contact_death(1.0);
  const auto eta0 = grid_start(10, o.seed);
  std::vector<CheckResult> out;
  std::uint64_t salt = 8;
  for (const auto& f : {TestFunction::capped_size(50), TestFunction::soft_count()}) {
    const auto r = martingale_residual(model, f, eta0, 1.0, 10000, root(o, salt++), {Caps{}, o.jobs, {}});
    auto c = make("martingale", "residual_" + f.id, 7, std::abs(r.estimate), 3 * r.standard_error, "<=");
    c.details = report_json(r);
    for (const auto& [k, v] : r.test_statistics) c.details[k] = v;
    out.push_back(c);
  }
  return out;
}

std::vector<CheckResult> generator(const VerifyOptions& o) {
  const auto model = contact_death(2.0);
  const auto alpha = grid_start(10, o.seed);
  const std::vector<double> grid{0.5, 0.1, 0.05, 0.01};
  const auto rows = generator_limit_check(model, TestFunction::size(), alpha, grid, 100000, root(o, 10), {Caps{}, o.jobs, {}});
  std::vector<CheckResult> out;
  const auto& last = rows.back();
  const double tol = std::max(3 * last.standard_error, 0.05 * std::abs(last.generator) + 0.01);
  auto c = make("generator", "gap_at_t=0.01", 8, last.gap, tol, "<=");
  json table = json::array();
  for (const auto& r : rows)
    table.push_back({{"t", r.t}, {"quotient", r.quotient}, {"generator", r.generator}, {"gap", r.gap}, {"standard_error", r.standard_error}});
  c.details = {{"rows", table}};
  out.push_back(c);
  // Gap nonincreasing down the grid, within two standard errors of the difference.
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const double slack = 2 * std::hypot(rows[k].standard_error, rows[k - 1].standard_error);
    worst = std::max(worst, rows[k].gap - rows[k - 1].gap - slack);
  }
  out.push_back(make("generator", "gap_nonincreasing_within_2sigma", 8, worst, 0.0, "<="));
  return out;
}

std::vector<CheckResult> explosion(const VerifyOptions& o) {
  const auto model = RateModel::superlinear_birth(1.0, 2.0, Box::unit(kDim));
  RandomStream rng({o.seed, 0, Channel::Initial, 2});
  const auto eta0 = random_configuration(2, Box::unit(kDim), rng);
  const std::size_t n = 1000;
  const auto key = root(o, 11);
  std::vector<double> tau(n, std::numeric_limits<double>::infinity());
  parallel_for(n, o.jobs, [&](std::size_t i) {
    const auto traj = simulate(model, eta0, 10.0, Caps{10'000, 10'000'000}, key.for_trajectory(i));
    if (traj.capped()) tau[i] = traj.status.time;
  });
  const auto capped = static_cast<double>(std::count_if(tau.begin(), tau.end(), [](double t) { return std::isfinite(t); }));
  auto sorted = tau;
  std::sort(sorted.begin(), sorted.end());
  const double median = 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  auto c1 = make("explosion", "cap_hit_fraction", 9, capped / n, 0.99, ">=");
  c1.details = {{"runs", n}, {"cap", 10'000}};
  auto c2 = make("explosion", "median_cap_time", 9, median, 10.0, "<");
  return {c1, c2};
}

// Exhaustive permutation search, independent of the assignment solver.
double brute_force_distance(const Configuration& a, const Configuration& b) {
  const std::size_t n = a.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best;
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += squared_distance(a.position(i), b.position(perm[i]));
    if (c < best_cost) {
      best_cost = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  std::vector<double> pairs;
  for (std::size_t i = 0; i < n; ++i) pairs.push_back(squared_distance(a.position(i), b.position(best[i])));
  std::sort(pairs.begin(), pairs.end());
  double total = 0.0;
  for (double c : pairs) total += c;
  return std::sqrt(total);
}

std::vector<CheckResult> metric(const VerifyOptions& o) {
  RandomStream rng({o.seed, 0, Channel::Auxiliary, 12});
  std::size_t mismatches = 0;
  for (std::size_t trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + trial % 7, d = 1 + trial % 3;
    const Box box{Point(d, -2.0), Point(d, 2.0)};
    const auto a = random_configuration(n, box, rng), b = random_configuration(n, box, rng);
    if (euclidean_matching_distance(a, b) != brute_force_distance(a, b)) ++mismatches;
  }
  auto c1 = make("metric", "assignment_vs_exhaustive_mismatches", 10, static_cast<double>(mismatches), 0.0, "==");
  c1.details = {{"instances", 1000}};

  std::size_t violations = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 1 + trial % 8, d = 1 + trial % 2;
    const Box box{Point(d, -0.3), Point(d, 0.3)};
    const auto a = random_configuration(n, box, rng), b = random_configuration(n, box, rng),
               c = random_configuration(n, box, rng);
    const double excess = dist(a, c) - dist(a, b) - dist(b, c);
    worst = std::max(worst, excess);
    if (excess > 1e-12) ++violations;
  }
  auto c2 = make("metric", "triangle_inequality_violations", 10, static_cast<double>(violations), 0.0, "==");
  c2.details = {{"triples", 10000}, {"max_excess", worst}};
  return {c1, c2};
}

std::vector<CheckResult> continuity(const VerifyOptions& o) {
  const auto model = contact_death(1.0, Kernel::gaussian(1.0));
  const auto alpha = grid_start(5, o.seed);
  const std::vector<double> scales{1e-2, 1e-3, 1e-4};
  std::vector<Configuration> perturbed;
  RandomStream rng({o.seed, 0, Channel::Auxiliary, 13});
  for (double s : scales) {
    // Each point moves by exactly s in a uniformly random direction.
    std::vector<Point> pts;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      const double th = rng.uniform(0.0, 2 * std::numbers::pi);
      pts.push_back({alpha.position(i)[0] + s * std::cos(th), alpha.position(i)[1] + s * std::sin(th)});
    }
    perturbed.push_back(Configuration::from_points(kDim, pts));
  }
  const auto rows = continuity_experiment(model, alpha, perturbed, 1.0, 1000, root(o, 14), {0.1}, Caps{}, o.jobs);
  json table = json::array();
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    table.push_back({{"displacement", rows[k].displacement_scale},
                     {"exceedance", rows[k].exceedance[0]},
                     {"standard_error", rows[k].standard_error[0]},
                     {"mean_sup_dist", rows[k].mean_sup_dist},
                     {"capped_runs", rows[k].capped_runs}});
    if (k > 0) {
      const double slack = 2 * std::hypot(rows[k].standard_error[0], rows[k - 1].standard_error[0]);
      worst = std::max(worst, rows[k].exceedance[0] - rows[k - 1].exceedance[0] - slack);
    }
  }
  auto c1 = make("continuity", "exceedance_nonincreasing_within_2sigma", 11, worst, 0.0, "<=");
  c1.details = {{"rows", table}, {"epsilon", 0.1}, {"pairs", 1000}};
  auto c2 = make("continuity", "exceedance_at_1e-4", 11, rows.back().exceedance[0], 0.05, "<");
  return {c1, c2};
}

using SuiteFn = std::vector<CheckResult> (*)(const VerifyOptions&);

const std::vector<std::pair<std::string, SuiteFn>>& registry() {
  static const std::vector<std::pair<std::string, SuiteFn>> r{
      {"exponential-clocks", exponential_clocks}, {"yule", yule},
      {"moment-bounds", moment_bounds},           {"linear-death", linear_death},
      {"coupling", coupling_suite},               {"martingale", martingale},
      {"generator", generator},                   {"explosion", explosion},
      {"metric", metric},                         {"continuity", continuity},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [name, fn] : registry()) v.push_back(name);
    v.push_back("all");
    return v;
  }();
  return names;
}

std::vector<CheckResult> run_suite(const std::string& suite, const VerifyOptions& opts) {
  std::vector<CheckResult> out;
  for (const auto& [name, fn] : registry()) {
    if (suite == "all" || suite == name) {
      auto part = fn(opts);
      out.insert(out.end(), part.begin(), part.end());
    }
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "unknown suite '" + suite + "'");
  return out;
}

json check_json(const CheckResult& c) {
  return {{"suite", c.suite},         {"name", c.name},     {"criterion", c.criterion},
          {"statistic", c.statistic}, {"threshold", c.threshold}, {"relation", c.relation},
          {"verdict", c.passed ? "pass" : "fail"}, {"details", c.details}};
}

json verify_report(const std::string& suite, const VerifyOptions& opts, const std::vector<CheckResult>& checks) {
  json arr = json::array();
  std::size_t failures = 0;
  for (const auto& c : checks) {
    arr.push_back(check_json(c));
    failures += !c.passed;
  }
  return {{"schema", "bdsim-verify/1"}, {"suite", suite},       {"seed", opts.seed},
          {"checks", arr},              {"failures", failures}, {"passed", failures == 0}};
}

}  // namespace bdsim

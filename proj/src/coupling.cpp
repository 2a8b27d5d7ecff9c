#include "bdsim/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <unordered_set>

#include "bdsim/error.hpp"
#include "bdsim/parallel.hpp"
#include "chain_detail.hpp"

namespace bdsim {

namespace {

constexpr double kRatioSlack = 1e-9;

std::string points_to_string(const Configuration& c) {
  std::ostringstream os;
  os << "{";
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (i) os << ", ";
    os << "(";
    auto x = c.position(i);
    for (std::size_t k = 0; k < x.size(); ++k) os << (k ? "," : "") << x[k];
    os << ")";
  }
  os << "}";
  return os.str();
}

}  // namespace

bool CoupledPair::inclusion_held() const {
  return std::all_of(audit.begin(), audit.end(), [](const AuditEntry& a) { return a.inclusion; });
}

std::string PremiseReport::describe() const {
  if (passed) return "premise holds on all probes";
  std::ostringstream os;
  os << failed_inequality << " inequality violated: lower=" << points_to_string(*witness_lower)
     << " upper=" << points_to_string(*witness_upper) << " x=(";
  for (std::size_t k = 0; k < witness_point.size(); ++k) os << (k ? "," : "") << witness_point[k];
  os << ") lhs=" << lhs << " rhs=" << rhs;
  return os.str();
}

PremiseReport check_monotone_premise(const RateModel& m1, const RateModel& m2, std::size_t trials, std::size_t max_n,
                                     const RngStreamKey& key, const Box& box) {
  PremiseReport report;
  auto fail = [&](const char* which, const Configuration& lo, const Configuration& up, std::span<const double> x,
                  double lhs, double rhs) {
    report.passed = false;
    report.failed_inequality = which;
    report.witness_lower = lo;
    report.witness_upper = up;
    report.witness_point.assign(x.begin(), x.end());
    report.lhs = lhs;
    report.rhs = rhs;
  };

  for (std::size_t t = 0; t < trials && report.passed; ++t) {
    RandomStream rng(key.with(Channel::Auxiliary, t));
    const std::size_t n = rng.index(max_n + 1);
    const auto upper = random_configuration(n, box, rng);
    std::vector<Particle> kept;
    for (auto& p : upper.particles()) {
      if (rng.uniform_open() < 0.5) kept.push_back(std::move(p));
    }
    const Configuration lower(box.dimension(), std::move(kept));

    Point x(box.dimension());
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = rng.uniform(box.lo[k], box.hi[k]);
    const double b1 = birth_rate(m1, x, lower);
    const double b2 = birth_rate(m2, x, upper);
    if (b1 > b2 * (1.0 + 1e-12)) {
      fail("birth", lower, upper, x, b1, b2);
      break;
    }
    for (std::size_t i = 0; i < lower.size(); ++i) {
      const double d1 = death_rate_at(m1, lower, i);
      const double d2 = death_rate(m2, lower.position(i), upper);
      if (d1 < d2 * (1.0 - 1e-12)) {
        fail("death", lower, upper, lower.position(i), d1, d2);
        break;
      }
    }
  }
  return report;
}

std::pair<Configuration, Configuration> nest_initial(const Configuration& lower, const Configuration& upper) {
  if (lower.dimension() != upper.dimension()) throw Error(ErrorCode::DimensionMismatch, "nested initial: dimension mismatch");
  std::vector<Point> upper_points;
  for (std::size_t i = 0; i < upper.size(); ++i) upper_points.push_back(upper.point(i));
  auto labelled_upper = Configuration::from_points(upper.dimension(), upper_points);
  std::vector<Particle> lower_particles;
  for (std::size_t i = 0; i < lower.size(); ++i) {
    auto slot = labelled_upper.find_position(lower.position(i));
    if (!slot) throw Error(ErrorCode::Precondition, "lower initial configuration is not contained in the upper one");
    lower_particles.push_back({labelled_upper.id(*slot), lower.point(i)});
  }
  // Keep the lower copy in the upper's slot order.
  std::sort(lower_particles.begin(), lower_particles.end(), [&](const Particle& a, const Particle& b) {
    return *labelled_upper.find_id(a.id) < *labelled_upper.find_id(b.id);
  });
  return {Configuration(lower.dimension(), std::move(lower_particles)), std::move(labelled_upper)};
}

CoupledPair simulate_coupled(const RateModel& m1, const RateModel& m2, const Configuration& lower0,
                             const Configuration& upper0, double horizon, const Caps& caps, const RngStreamKey& key) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw Error(ErrorCode::InvalidArgument, "horizon must be positive");
  if (caps.max_events == 0) throw Error(ErrorCode::InvalidArgument, "max_events must be positive");
  if (caps.max_population <= upper0.size()) {
    throw Error(ErrorCode::InvalidArgument, "max_population must exceed the initial population");
  }

  // Relabel only when the lower copy does not already carry upper labels.
  Configuration lower = lower0, upper = upper0;
  if (!lower0.is_subset_of(upper0)) std::tie(lower, upper) = nest_initial(lower0, upper0);

  CoupledPair pair;
  pair.shared_key = key;
  for (auto* t : {&pair.lower, &pair.upper}) {
    t->horizon = horizon;
    t->key = key;
  }
  pair.lower.initial = lower;
  pair.upper.initial = upper;

  ParticleRegistry registry(upper);
  detail::PositionIndex occupied(upper);
  std::unordered_set<ParticleId> in_lower(lower.ids().begin(), lower.ids().end());
  double clock = 0.0;
  TrajectoryStatus status;

  for (std::uint64_t n = 0;; ++n) {
    const double b2 = cumulative_birth_rate(m2, upper);
    const double d1_total = cumulative_death_rate(m1, lower);
    const auto d1 = death_rates(m1, lower);
    const auto d2 = death_rates(m2, upper);

    // Per-candidate weights: lower particles at d1, then upper-only particles at d2.
    std::vector<double> weights = d1;
    std::vector<std::size_t> upper_only_slots;
    double d2_only_total = 0.0;
    for (std::size_t j = 0; j < upper.size(); ++j) {
      if (in_lower.count(upper.id(j))) {
        const std::size_t i = *lower.find_id(upper.id(j));
        if (d2[j] > d1[i] * (1.0 + kRatioSlack)) {
          throw Error(ErrorCode::PremiseViolation, "coupling: d2 > d1 for particle " + std::to_string(upper.id(j)) +
                                                       " in lower state " + points_to_string(lower));
        }
        continue;
      }
      upper_only_slots.push_back(j);
      weights.push_back(d2[j]);
      d2_only_total += d2[j];
    }

    const double total = b2 + d1_total + d2_only_total;
    if (!(total > 0.0)) {
      status = {Termination::Absorbed, clock};
      break;
    }

    RandomStream race(key.with(Channel::Race, n));
    const double t = clock + race.exponential(total);
    if (t > horizon) {
      status = {Termination::Completed, horizon};
      break;
    }
    if (pair.audit.size() >= caps.max_events) {
      status = {Termination::CapHit, t, CapKind::Events, caps.max_events};
      break;
    }

    RandomStream accept(key.with(Channel::Acceptance, n));
    if (race.uniform_open() * total < b2) {
      RandomStream loc(key.with(Channel::Location, n));
      Point x = detail::place_birth(m2, upper, loc, [&](std::span<const double> p) { return occupied.contains(p); });
      if (upper.size() + 1 > caps.max_population) {
        status = {Termination::CapHit, t, CapKind::Population, caps.max_population};
        break;
      }
      const double rb1 = birth_rate(m1, x, lower);
      const double rb2 = birth_rate(m2, x, upper);
      if (rb1 > rb2 * (1.0 + kRatioSlack)) {
        throw Error(ErrorCode::PremiseViolation,
                    "coupling: b1 > b2 at a proposed birth in lower state " + points_to_string(lower));
      }
      const double ratio = rb2 > 0.0 ? rb1 / rb2 : 0.0;
      const ParticleId id = registry.issue();
      upper.insert_unchecked(id, x);
      occupied.insert(x);
      pair.upper.events.push_back({t, EventKind::Birth, id, x});
      if (accept.uniform_open() < ratio) {
        lower.insert_unchecked(id, x);
        in_lower.insert(id);
        pair.lower.events.push_back({t, EventKind::Birth, id, x});
      }
    } else {
      RandomStream victim(key.with(Channel::DeathRace, n));
      const std::size_t k = detail::pick_weighted(weights, victim.uniform_open());
      if (k < d1.size()) {
        const ParticleId id = lower.id(k);
        const std::size_t j = *upper.find_id(id);
        Point x = lower.point(k);
        const double ratio = d1[k] > 0.0 ? d2[j] / d1[k] : 0.0;
        lower.erase_slot(k);
        in_lower.erase(id);
        pair.lower.events.push_back({t, EventKind::Death, id, x});
        if (accept.uniform_open() < ratio) {
          upper.erase_slot(j);
          occupied.erase(x);
          pair.upper.events.push_back({t, EventKind::Death, id, std::move(x)});
        }
      } else {
        const std::size_t j = upper_only_slots[k - d1.size()];
        const ParticleId id = upper.id(j);
        Point x = upper.point(j);
        upper.erase_slot(j);
        occupied.erase(x);
        pair.upper.events.push_back({t, EventKind::Death, id, std::move(x)});
      }
    }
    clock = t;
    pair.audit.push_back({t, n, lower.is_subset_of(upper)});
  }

  pair.lower.status = status;
  pair.upper.status = status;
  return pair;
}

double sup_distance(const Trajectory& a, const Trajectory& b) {
  Configuration sa = a.initial, sb = b.initial;
  double sup = dist(sa, sb);
  std::size_t ia = 0, ib = 0;
  while (ia < a.events.size() || ib < b.events.size()) {
    const double ta = ia < a.events.size() ? a.events[ia].time : INFINITY;
    const double tb = ib < b.events.size() ? b.events[ib].time : INFINITY;
    const double t = std::min(ta, tb);
    while (ia < a.events.size() && a.events[ia].time == t) apply_event(sa, a.events[ia++]);
    while (ib < b.events.size() && b.events[ib].time == t) apply_event(sb, b.events[ib++]);
    sup = std::max(sup, dist(sa, sb));
    if (sup >= 1.0) break;
  }
  return sup;
}

Configuration match_labels(const Configuration& alpha, const Configuration& perturbed) {
  if (alpha.size() != perturbed.size()) {
    throw Error(ErrorCode::Precondition, "continuity: perturbation changes the number of points");
  }
  const auto m = optimal_matching(alpha, perturbed);
  std::vector<Particle> particles;
  particles.reserve(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) particles.push_back({alpha.id(i), perturbed.point(m.assignment[i])});
  return Configuration(alpha.dimension(), std::move(particles));
}

std::vector<ContinuityRow> continuity_experiment(const RateModel& model, const Configuration& alpha,
                                                 const std::vector<Configuration>& perturbations, double horizon,
                                                 std::size_t n_runs, const RngStreamKey& key,
                                                 const std::vector<double>& epsilons, const Caps& caps,
                                                 unsigned jobs) {
  std::vector<Configuration> labelled;
  std::vector<ContinuityRow> rows(perturbations.size());
  for (std::size_t k = 0; k < perturbations.size(); ++k) {
    labelled.push_back(match_labels(alpha, perturbations[k]));
    double scale = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      scale = std::max(scale, std::sqrt(squared_distance(alpha.position(i), labelled[k].position(i))));
    }
    rows[k].displacement_scale = scale;
    rows[k].epsilons = epsilons;
  }

  // sups[run][perturbation]; negative marks a capped pair.
  std::vector<std::vector<double>> sups(n_runs, std::vector<double>(perturbations.size()));
  parallel_for(n_runs, jobs, [&](std::size_t r) {
    const auto run_key = key.for_trajectory(r);
    const auto base = simulate(model, alpha, horizon, caps, run_key);
    for (std::size_t k = 0; k < labelled.size(); ++k) {
      const auto other = simulate(model, labelled[k], horizon, caps, run_key);
      sups[r][k] = (base.capped() || other.capped()) ? -1.0 : sup_distance(base, other);
    }
  });

  for (std::size_t k = 0; k < rows.size(); ++k) {
    auto& row = rows[k];
    row.exceedance.assign(epsilons.size(), 0.0);
    double sum = 0.0;
    for (std::size_t r = 0; r < n_runs; ++r) {
      double s = sups[r][k];
      if (s < 0.0) {
        ++row.capped_runs;
        s = 1.0;  // a capped pair counts as maximally separated
      }
      sum += s;
      for (std::size_t e = 0; e < epsilons.size(); ++e) {
        if (s > epsilons[e]) row.exceedance[e] += 1.0;
      }
    }
    const double n = static_cast<double>(n_runs);
    row.mean_sup_dist = n_runs ? sum / n : 0.0;
    row.standard_error.resize(epsilons.size());
    for (std::size_t e = 0; e < epsilons.size(); ++e) {
      row.exceedance[e] /= n;
      row.standard_error[e] = std::sqrt(row.exceedance[e] * (1.0 - row.exceedance[e]) / n);
    }
  }
  return rows;
}

}  // namespace bdsim

#pragma once

// Two processes driven by one noise: a monotone coupling in which the
// lower-rate process stays inside the higher-rate one, and the shared-noise
// experiment for continuity in the initial condition.

#include <optional>
#include <string>
#include <vector>

#include "bdsim/simulator.hpp"

namespace bdsim {

struct AuditEntry {
  double time = 0.0;
  std::uint64_t event = 0;  // index in the joint chain
  bool inclusion = true;

  friend bool operator==(const AuditEntry&, const AuditEntry&) = default;
};

struct CoupledPair {
  Trajectory lower;  // law of model 1
  Trajectory upper;  // law of model 2
  RngStreamKey shared_key;
  std::vector<AuditEntry> audit;

  bool inclusion_held() const;
};

struct PremiseReport {
  bool passed = true;
  std::string failed_inequality;  // "birth" or "death"
  std::optional<Configuration> witness_lower;
  std::optional<Configuration> witness_upper;
  Point witness_point;
  double lhs = 0.0;
  double rhs = 0.0;

  std::string describe() const;
};

/// Searches random nested pairs eta1 subset of eta2 (points uniform in `box`,
/// |eta2| <= max_n) for a violation of b1(x, eta1) <= b2(x, eta2) or
/// d1(x, eta1) >= d2(x, eta2).
PremiseReport check_monotone_premise(const RateModel& m1, const RateModel& m2, std::size_t trials, std::size_t max_n,
                                     const RngStreamKey& key, const Box& box);

/// Labels `upper` lexicographically and gives each point of `lower` the label
/// of the identical upper point. Throws if lower is not contained in upper.
std::pair<Configuration, Configuration> nest_initial(const Configuration& lower, const Configuration& upper);

/// Joint jump chain. Births are proposed from model 2 and thinned into the
/// lower copy with probability b1 / b2; lower particles die at rate d1 and take
/// the upper copy with them with probability d2 / d1; upper-only particles die
/// at rate d2. `lower0` must be positionally contained in `upper0`; it is
/// relabelled with the upper labels. Throws PremiseViolation if an acceptance
/// probability exceeds one.
CoupledPair simulate_coupled(const RateModel& m1, const RateModel& m2, const Configuration& lower0,
                             const Configuration& upper0, double horizon, const Caps& caps, const RngStreamKey& key);

struct ContinuityRow {
  double displacement_scale = 0.0;  // max point displacement of the perturbation
  std::vector<double> epsilons;
  std::vector<double> exceedance;   // P{ sup_t dist > eps } per epsilon
  std::vector<double> standard_error;
  double mean_sup_dist = 0.0;
  std::size_t capped_runs = 0;
};

/// Sup over event times in [0, horizon] of dist between two trajectories.
double sup_distance(const Trajectory& a, const Trajectory& b);

/// Copies the labels of alpha onto `perturbed` through an optimal matching and
/// stores the points in alpha's slot order.
Configuration match_labels(const Configuration& alpha, const Configuration& perturbed);

std::vector<ContinuityRow> continuity_experiment(const RateModel& model, const Configuration& alpha,
                                                 const std::vector<Configuration>& perturbations, double horizon,
                                                 std::size_t n_runs, const RngStreamKey& key,
                                                 const std::vector<double>& epsilons, const Caps& caps = {},
                                                 unsigned jobs = 1);

}  // namespace bdsim

#pragma once

// Exact event-driven simulation through the embedded jump chain: holding times
// are Exp(B + D), a jump is a birth with probability B / (B + D), births are
// placed with density b(., eta) / B(eta), victims are chosen with probability
// d(x_i, eta) / D(eta).

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "bdsim/config_space.hpp"
#include "bdsim/rate_models.hpp"
#include "bdsim/rng.hpp"

namespace bdsim {

enum class EventKind { Birth, Death };

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::Birth;
  ParticleId id = 0;
  Point position;

  friend bool operator==(const Event&, const Event&) = default;
};

enum class Termination { Completed, Absorbed, CapHit };
enum class CapKind { Population, Events };

struct TrajectoryStatus {
  Termination kind = Termination::Completed;
  double time = 0.0;  // absorption time or tau_n; the horizon when completed
  CapKind cap_kind = CapKind::Population;
  std::uint64_t cap = 0;

  friend bool operator==(const TrajectoryStatus&, const TrajectoryStatus&) = default;
};

struct Caps {
  std::size_t max_population = 100'000;
  std::size_t max_events = 10'000'000;
};

struct Trajectory {
  Configuration initial{1};
  std::vector<Event> events;
  double horizon = 0.0;
  TrajectoryStatus status;
  RngStreamKey key;

  /// States are defined on [0, valid_until) for CapHit, [0, horizon] otherwise.
  double valid_until() const noexcept;
  bool capped() const noexcept { return status.kind == Termination::CapHit; }

  friend bool operator==(const Trajectory& a, const Trajectory& b) {
    return a.initial == b.initial && a.events == b.events && a.horizon == b.horizon && a.status == b.status &&
           a.key == b.key;
  }
};

/// One step of the jump chain from state eta at time `clock`. The draws come
/// from the streams keyed by `key` with counter = `key.counter` (the event
/// number). Returns nullopt when B(eta) + D(eta) = 0. A birth consumes a label
/// from the registry.
std::optional<Event> next_event(const RateModel& model, const Configuration& eta, ParticleRegistry& registry,
                                double clock, const RngStreamKey& key);

/// Runs the jump chain on [0, horizon]. Deterministic in all arguments.
/// Throws if caps.max_population <= |eta0|, caps.max_events == 0 or horizon <= 0.
Trajectory simulate(const RateModel& model, const Configuration& eta0, double horizon, const Caps& caps,
                    const RngStreamKey& key);

/// Right-continuous state at time t.
Configuration state_at(const Trajectory& traj, double t);

/// Calls visit(state, from, to) for each constancy interval of the trajectory
/// clipped to [0, until]. Intervals of zero length are skipped.
void for_each_interval(const Trajectory& traj, double until,
                       const std::function<void(const Configuration&, double, double)>& visit);

/// Applies `event` to `state`; throws if it kills an absent particle or
/// duplicates a label or position.
void apply_event(Configuration& state, const Event& event);

/// Replays the whole log checking times, kills and positions. Returns an
/// empty string when valid, else a description of the first problem.
std::string check_event_log(const Trajectory& traj);

/// Mean of a Yule process with per-capita rate mu started from z0 individuals.
double yule_mean(double z0, double mu, double t);

/// Moment bound (c2 t + E|eta_0|) exp(c1 t).
double expectation_bound(double mean0, const GrowthCertificate& cert, double t);

}  // namespace bdsim

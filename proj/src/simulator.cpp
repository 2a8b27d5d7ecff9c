#include "bdsim/simulator.hpp"

#include <cmath>
#include <string>

#include "bdsim/error.hpp"
#include "chain_detail.hpp"

namespace bdsim {

namespace {

// Shared by next_event and simulate; `occupied` decides birth collisions.
template <class Occupied>
std::optional<Event> step(const RateModel& model, const Configuration& eta, ParticleRegistry& registry, double clock,
                          const RngStreamKey& key, Occupied&& occupied) {
  const double b = cumulative_birth_rate(model, eta);
  const double d = cumulative_death_rate(model, eta);
  const double total = b + d;
  if (!(total > 0.0)) return std::nullopt;

  RandomStream race(key.with(Channel::Race, key.counter));
  Event ev;
  ev.time = clock + race.exponential(total);
  if (race.uniform_open() * total < b) {
    RandomStream loc(key.with(Channel::Location, key.counter));
    ev.kind = EventKind::Birth;
    ev.position = detail::place_birth(model, eta, loc, occupied);
    ev.id = registry.issue();
  } else {
    RandomStream victim(key.with(Channel::DeathRace, key.counter));
    const auto rates = death_rates(model, eta);
    const std::size_t slot = detail::pick_weighted(rates, victim.uniform_open());
    ev.kind = EventKind::Death;
    ev.id = eta.id(slot);
    ev.position = eta.point(slot);
  }
  return ev;
}

}  // namespace

double Trajectory::valid_until() const noexcept {
  return status.kind == Termination::CapHit ? status.time : horizon;
}

std::optional<Event> next_event(const RateModel& model, const Configuration& eta, ParticleRegistry& registry,
                                double clock, const RngStreamKey& key) {
  return step(model, eta, registry, clock, key,
              [&](std::span<const double> x) { return eta.find_position(x).has_value(); });
}

Trajectory simulate(const RateModel& model, const Configuration& eta0, double horizon, const Caps& caps,
                    const RngStreamKey& key) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw Error(ErrorCode::InvalidArgument, "horizon must be positive");
  if (caps.max_events == 0) throw Error(ErrorCode::InvalidArgument, "max_events must be positive");
  if (caps.max_population <= eta0.size()) {
    throw Error(ErrorCode::InvalidArgument, "max_population must exceed the initial population");
  }

  Trajectory traj;
  traj.initial = eta0;
  traj.horizon = horizon;
  traj.key = key;

  Configuration state = eta0;
  ParticleRegistry registry(eta0);
  detail::PositionIndex occupied(eta0);
  double clock = 0.0;

  for (std::uint64_t n = 0;; ++n) {
    auto ev = step(model, state, registry, clock, key.with(Channel::Race, n),
                   [&](std::span<const double> x) { return occupied.contains(x); });
    if (!ev) {
      traj.status = {Termination::Absorbed, clock};
      break;
    }
    if (ev->time > horizon) {
      traj.status = {Termination::Completed, horizon};
      break;
    }
    if (traj.events.size() >= caps.max_events) {
      traj.status = {Termination::CapHit, ev->time, CapKind::Events, caps.max_events};
      break;
    }
    if (ev->kind == EventKind::Birth) {
      if (state.size() + 1 > caps.max_population) {
        traj.status = {Termination::CapHit, ev->time, CapKind::Population, caps.max_population};
        break;
      }
      state.insert_unchecked(ev->id, ev->position);
      occupied.insert(ev->position);
    } else {
      occupied.erase(ev->position);
      state.erase_slot(*state.find_id(ev->id));
    }
    clock = ev->time;
    traj.events.push_back(std::move(*ev));
  }
  return traj;
}

void apply_event(Configuration& state, const Event& event) {
  if (event.kind == EventKind::Birth) {
    state.insert(event.id, event.position);
    return;
  }
  auto slot = state.find_id(event.id);
  if (!slot) throw Error(ErrorCode::Precondition, "event kills particle " + std::to_string(event.id) + " which is absent");
  auto x = state.position(*slot);
  if (!std::equal(x.begin(), x.end(), event.position.begin(), event.position.end())) {
    throw Error(ErrorCode::Precondition, "death event position does not match particle " + std::to_string(event.id));
  }
  state.erase_slot(*slot);
}

Configuration state_at(const Trajectory& traj, double t) {
  if (!(t >= 0.0) || t > traj.horizon) throw Error(ErrorCode::Precondition, "state_at: time outside [0, horizon]");
  if (traj.capped() && t >= traj.status.time) {
    throw Error(ErrorCode::Precondition, "state_at: time at or beyond the cap time");
  }
  Configuration state = traj.initial;
  for (const auto& ev : traj.events) {
    if (ev.time > t) break;
    apply_event(state, ev);
  }
  return state;
}

void for_each_interval(const Trajectory& traj, double until,
                       const std::function<void(const Configuration&, double, double)>& visit) {
  Configuration state = traj.initial;
  double from = 0.0;
  for (const auto& ev : traj.events) {
    if (ev.time > until) break;
    if (ev.time > from) visit(state, from, ev.time);
    apply_event(state, ev);
    from = ev.time;
  }
  if (until > from) visit(state, from, until);
}

std::string check_event_log(const Trajectory& traj) {
  Configuration state = traj.initial;
  double last = 0.0;
  for (std::size_t k = 0; k < traj.events.size(); ++k) {
    const auto& ev = traj.events[k];
    if (!(ev.time > last) && !(k == 0 && ev.time > 0.0)) {
      return "event " + std::to_string(k) + ": time does not increase";
    }
    if (ev.time > traj.horizon) return "event " + std::to_string(k) + ": beyond horizon";
    try {
      apply_event(state, ev);
    } catch (const Error& e) {
      return "event " + std::to_string(k) + ": " + e.what();
    }
    last = ev.time;
  }
  return {};
}

double yule_mean(double z0, double mu, double t) { return z0 * std::exp(mu * t); }

double expectation_bound(double mean0, const GrowthCertificate& cert, double t) {
  return (cert.c2 * t + mean0) * std::exp(cert.c1 * t);
}

}  // namespace bdsim

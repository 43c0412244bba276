#pragma once
// Forward simulation of the conversational jump process, two ways:
//
//  - gillespie_simulate: exact event-time sampling. Holding time is
//    exponential in the total active rate H(x); the event is chosen with
//    probability h_i / H(x) among active events.
//  - slotted_simulate: the discretized scheme on a fixed dt grid. Per slot,
//    P(no event) = exp(-H dt) and P(event i) = (h_i / H) (1 - exp(-H dt)).
//    At most one event per slot, so dt must be small against 1/H.
//
// Slot timing convention: the slot-k event (if any) fires at the slot start
// k*dt, its guard is evaluated in the pre-slot state, and the state DURING
// slot k is the post-event state. Observations attached to slot k therefore
// reflect that post-event state.

#include <cmath>
#include <limits>
#include <vector>

#include "catalog.hpp"
#include "rng.hpp"

namespace turnmjp {

constexpr int kNoEvent = -1;

struct TimedEvent {
    double time_s = 0.0;
    int event_id = -1;
};

struct Trajectory {
    StateVector initial_state;
    std::vector<TimedEvent> events;
    double horizon_s = 0.0;
};

struct SlotTrajectory {
    StateVector initial_state;          // state just before slot 0
    std::vector<int> slot_events;       // event id per slot, kNoEvent if none
    double dt_s = 0.0;

    int slot_count() const { return static_cast<int>(slot_events.size()); }
};

inline void check_rates(const EventCatalog& catalog, const RateVector& rates) {
    if (static_cast<int>(rates.size()) != catalog.event_count())
        throw ConfigError("rate vector length does not match the event catalog");
    for (double h : rates)
        if (!(h >= 0.0) || !std::isfinite(h))
            throw ConfigError("rates must be finite and nonnegative");
}

inline double total_active_rate(const StateVector& x, const EventCatalog& catalog,
                                const RateVector& rates) {
    double H = 0.0;
    for (const EventSpec& e : catalog.events())
        if (e.guard_holds(x)) H += rates[e.id];
    return H;
}

inline Trajectory gillespie_simulate(const EventCatalog& catalog, const RateVector& rates,
                                     const StateVector& x0, double horizon_s, Rng& rng) {
    check_rates(catalog, rates);
    if (!(horizon_s >= 0.0))
        throw ConfigError("gillespie_simulate: horizon must be nonnegative");
    Trajectory traj;
    traj.initial_state = x0;
    traj.horizon_s = horizon_s;

    StateVector x = x0;
    double t = 0.0;
    std::vector<int> ids;
    std::vector<double> weights;
    while (true) {
        ids.clear();
        weights.clear();
        for (const EventSpec& e : catalog.events()) {
            if (e.guard_holds(x) && rates[e.id] > 0.0) {
                ids.push_back(e.id);
                weights.push_back(rates[e.id]);
            }
        }
        double H = 0.0;
        for (double w : weights) H += w;
        if (H <= 0.0) break;  // absorbing under these rates; stay put
        t += rng.exponential(H);
        if (t >= horizon_s) break;
        const int pick = ids[rng.categorical(weights)];
        x = apply_event(x, catalog.event(pick));
        traj.events.push_back({t, pick});
    }
    return traj;
}

struct SlotDistribution {
    double p_none = 1.0;
    std::vector<std::pair<int, double>> event_probs;  // (event id, probability)

    double total() const {
        double s = p_none;
        for (const auto& [id, p] : event_probs) s += p;
        return s;
    }
};

inline SlotDistribution slot_event_distribution(const EventCatalog& catalog,
                                                const StateVector& x,
                                                const RateVector& rates, double dt_s) {
    check_rates(catalog, rates);
    if (!(dt_s > 0.0))
        throw ConfigError("slot_event_distribution: dt must be positive");
    SlotDistribution d;
    double H = 0.0;
    for (const EventSpec& e : catalog.events())
        if (e.guard_holds(x)) H += rates[e.id];
    if (H <= 0.0) return d;  // p_none = 1, nothing can fire
    const double p_any = -std::expm1(-H * dt_s);
    d.p_none = std::exp(-H * dt_s);
    for (const EventSpec& e : catalog.events())
        if (e.guard_holds(x) && rates[e.id] > 0.0)
            d.event_probs.emplace_back(e.id, rates[e.id] / H * p_any);
    return d;
}

inline SlotTrajectory slotted_simulate(const EventCatalog& catalog, const RateVector& rates,
                                       const StateVector& x0, int slot_count, double dt_s,
                                       Rng& rng) {
    check_rates(catalog, rates);
    if (slot_count < 0)
        throw ConfigError("slotted_simulate: slot count must be nonnegative");
    if (!(dt_s > 0.0))
        throw ConfigError("slotted_simulate: dt must be positive");
    SlotTrajectory traj;
    traj.initial_state = x0;
    traj.dt_s = dt_s;
    traj.slot_events.reserve(slot_count);

    StateVector x = x0;
    std::vector<double> weights;
    std::vector<int> ids;
    for (int k = 0; k < slot_count; ++k) {
        const SlotDistribution d = slot_event_distribution(catalog, x, rates, dt_s);
        if (d.event_probs.empty() || rng.u01() < d.p_none) {
            traj.slot_events.push_back(kNoEvent);
            continue;
        }
        weights.clear();
        ids.clear();
        for (const auto& [id, p] : d.event_probs) {
            ids.push_back(id);
            weights.push_back(p);
        }
        const int pick = ids[rng.categorical(weights)];
        x = apply_event(x, catalog.event(pick));
        traj.slot_events.push_back(pick);
    }
    return traj;
}

// Per-slot state (the state holding DURING each slot, i.e. after that
// slot's event). Length equals slot_count().
inline std::vector<StateVector> states_during(const SlotTrajectory& traj,
                                              const EventCatalog& catalog) {
    std::vector<StateVector> out;
    out.reserve(traj.slot_events.size());
    StateVector x = traj.initial_state;
    for (int id : traj.slot_events) {
        if (id != kNoEvent) x = apply_event(x, catalog.event(id));
        out.push_back(x);
    }
    return out;
}

inline Trajectory to_trajectory(const SlotTrajectory& slot) {
    Trajectory traj;
    traj.initial_state = slot.initial_state;
    traj.horizon_s = slot.slot_count() * slot.dt_s;
    for (int k = 0; k < slot.slot_count(); ++k)
        if (slot.slot_events[k] != kNoEvent)
            traj.events.push_back({k * slot.dt_s, slot.slot_events[k]});
    return traj;
}

inline EventVector count_events(const EventCatalog& catalog, const Trajectory& traj) {
    EventVector counts(catalog.event_count(), 0);
    for (const TimedEvent& e : traj.events) counts.at(e.event_id) += 1;
    return counts;
}

// Log density of an event-time trajectory under the jump process:
// sum_i log h_{v_i}  -  sum_j H(x_j) * (time spent in x_j), with the final
// holding period running to the horizon. Replays the guard chain and
// rejects impossible trajectories; an event with zero rate gives -inf.
inline double trajectory_loglik(const EventCatalog& catalog, const RateVector& rates,
                                const Trajectory& traj) {
    check_rates(catalog, rates);
    double ll = 0.0;
    StateVector x = traj.initial_state;
    double t = 0.0;
    for (const TimedEvent& ev : traj.events) {
        if (ev.time_s < t || ev.time_s > traj.horizon_s)
            throw DataError("trajectory_loglik: event times must be increasing within the horizon");
        const EventSpec& e = catalog.event(ev.event_id);
        if (!e.guard_holds(x))
            throw DataError("trajectory_loglik: event " + std::to_string(ev.event_id) +
                            " blocked by its guard during replay");
        ll -= total_active_rate(x, catalog, rates) * (ev.time_s - t);
        if (rates[e.id] <= 0.0)
            return -std::numeric_limits<double>::infinity();
        ll += std::log(rates[e.id]);
        x = apply_event(x, e);
        t = ev.time_s;
    }
    ll -= total_active_rate(x, catalog, rates) * (traj.horizon_s - t);
    return ll;
}

} // namespace turnmjp

// Conversational-event classification and windowed statistics.
//
// Two front ends produce the same event stream: classify_events reads
// turn segments (audio pipeline), classify_trajectory reads a simulated
// jump trajectory.  window_counts then rolls events into tumbling
// fixed-length windows.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "turnmjp/catalog.hpp"
#include "turnmjp/errors.hpp"
#include "turnmjp/segment.hpp"
#include "turnmjp/simulate.hpp"

namespace turnmjp {

enum class ConvKind {
    Take,
    Yield,
    Transfer,
    Backchannel,
    CompetitionWin,
    CompetitionLoss,
};

inline const char* to_string(ConvKind k) {
    switch (k) {
        case ConvKind::Take: return "take";
        case ConvKind::Yield: return "yield";
        case ConvKind::Transfer: return "transfer";
        case ConvKind::Backchannel: return "backchannel";
        case ConvKind::CompetitionWin: return "competition-win";
        case ConvKind::CompetitionLoss: return "competition-loss";
    }
    throw ConfigError("unknown ConvKind");
}

inline ConvKind conv_kind_from_string(std::string_view s) {
    if (s == "take") return ConvKind::Take;
    if (s == "yield") return ConvKind::Yield;
    if (s == "transfer") return ConvKind::Transfer;
    if (s == "backchannel") return ConvKind::Backchannel;
    if (s == "competition-win") return ConvKind::CompetitionWin;
    if (s == "competition-loss") return ConvKind::CompetitionLoss;
    throw DataError("unknown conversational event kind: " + std::string(s));
}

struct ConversationalEvent {
    ConvKind kind = ConvKind::Take;
    SpeakerId actor = 0;
    // Transfers only: actor hands the turn to target (target != actor).
    std::optional<SpeakerId> target;
    double time_s = 0.0;
};

// The speaker who gains the floor at a turn-starting event.
inline SpeakerId turn_taker(const ConversationalEvent& e) {
    return e.kind == ConvKind::Transfer ? *e.target : e.actor;
}

namespace detail {

inline void sort_events(std::vector<ConversationalEvent>& ev) {
    std::stable_sort(ev.begin(), ev.end(),
                     [](const ConversationalEvent& a, const ConversationalEvent& b) {
                         if (a.time_s != b.time_s) return a.time_s < b.time_s;
                         if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
                         return a.actor < b.actor;
                     });
}

} // namespace detail

// Classify turn starts and ends.  A start within transfer_gap_max_s of
// another speaker's turn end is a transfer from that speaker (latest
// qualifying end wins; ties go to the lowest id).  A start with no such
// predecessor and no other turn open is a take; a start inside someone
// else's turn produces nothing by itself -- the overlap is scored when it
// resolves.  An end while another turn is still open is a competition
// loss, with a win for the longest-surviving open turn; an end with no
// successor start within the gap is a yield (a successor by any speaker,
// including the same one, suppresses the yield).  Backchannel candidates
// pass through as backchannel events at their start times.
inline std::vector<ConversationalEvent> classify_events(
    const std::vector<TurnSegment>& segments, double transfer_gap_max_s = 1.0) {
    if (transfer_gap_max_s < 0.0)
        throw ConfigError("classify_events: transfer_gap_max_s must be nonnegative");

    std::vector<TurnSegment> turns;
    std::vector<ConversationalEvent> out;
    for (const TurnSegment& s : segments) {
        if (s.end_s <= s.start_s) throw DataError("classify_events: empty segment");
        if (s.kind == TurnKind::Turn)
            turns.push_back(s);
        else
            out.push_back({ConvKind::Backchannel, s.speaker, {}, s.start_s});
    }
    std::sort(turns.begin(), turns.end(), [](const TurnSegment& a, const TurnSegment& b) {
        if (a.start_s != b.start_s) return a.start_s < b.start_s;
        return a.speaker < b.speaker;
    });

    for (std::size_t i = 0; i < turns.size(); ++i) {
        const TurnSegment& t = turns[i];

        // Start of t: transfer, take, or silent competition entry.
        const TurnSegment* prev = nullptr;
        bool other_open = false;
        for (std::size_t j = 0; j < turns.size(); ++j) {
            if (j == i) continue;
            const TurnSegment& u = turns[j];
            if (u.speaker != t.speaker && u.end_s <= t.start_s &&
                u.end_s >= t.start_s - transfer_gap_max_s) {
                if (!prev || u.end_s > prev->end_s ||
                    (u.end_s == prev->end_s && u.speaker < prev->speaker))
                    prev = &u;
            }
            if (u.start_s <= t.start_s && t.start_s < u.end_s) other_open = true;
        }
        if (prev)
            out.push_back({ConvKind::Transfer, prev->speaker, t.speaker, t.start_s});
        else if (!other_open)
            out.push_back({ConvKind::Take, t.speaker, {}, t.start_s});

        // End of t: competition loss, suppressed yield, or yield.
        const TurnSegment* survivor = nullptr;
        bool successor = false;
        for (std::size_t j = 0; j < turns.size(); ++j) {
            if (j == i) continue;
            const TurnSegment& u = turns[j];
            if (u.start_s < t.end_s && u.end_s > t.end_s) {
                if (!survivor || u.end_s > survivor->end_s ||
                    (u.end_s == survivor->end_s && u.speaker < survivor->speaker))
                    survivor = &u;
            }
            if (u.start_s >= t.end_s && u.start_s <= t.end_s + transfer_gap_max_s)
                successor = true;
        }
        if (survivor) {
            out.push_back({ConvKind::CompetitionLoss, t.speaker, {}, t.end_s});
            out.push_back({ConvKind::CompetitionWin, survivor->speaker, {}, t.end_s});
        } else if (!successor) {
            out.push_back({ConvKind::Yield, t.speaker, {}, t.end_s});
        }
    }

    detail::sort_events(out);
    return out;
}

// Map a jump trajectory onto the same vocabulary.  Seizing the floor is a
// take; a self-transfer changes nothing and emits nothing; yielding under
// competition scores a loss for the actor and a win for the lowest-id
// speaker left talking.
inline std::vector<ConversationalEvent> classify_trajectory(const EventCatalog& cat,
                                                            const Trajectory& traj) {
    std::vector<ConversationalEvent> out;
    StateVector x = traj.initial_state;
    for (const TimedEvent& te : traj.events) {
        if (te.event_id < 0 || te.event_id >= cat.event_count())
            throw DataError("classify_trajectory: event id out of range");
        const EventSpec& spec = cat.event(te.event_id);
        const StateVector next = apply_event(x, spec);
        switch (spec.kind) {
            case EventKind::Take:
            case EventKind::Seize:
                out.push_back({ConvKind::Take, spec.actor, {}, te.time_s});
                break;
            case EventKind::Yield:
                out.push_back({ConvKind::Yield, spec.actor, {}, te.time_s});
                break;
            case EventKind::Transfer:
                if (spec.actor != *spec.target)
                    out.push_back({ConvKind::Transfer, spec.actor, spec.target, te.time_s});
                break;
            case EventKind::Backchannel:
                out.push_back({ConvKind::Backchannel, spec.actor, {}, te.time_s});
                break;
            case EventKind::YieldCompetition: {
                SpeakerId winner = -1;
                for (int c = 0; c < next.speaker_count() && winner < 0; ++c)
                    if (next.speaking(c)) winner = c;
                if (winner < 0)
                    throw DataError("classify_trajectory: competition yield left nobody talking");
                out.push_back({ConvKind::CompetitionLoss, spec.actor, {}, te.time_s});
                out.push_back({ConvKind::CompetitionWin, winner, {}, te.time_s});
                break;
            }
        }
        x = next;
    }
    return out;
}

struct EventCounts {
    double window_start_s = 0.0;
    double window_length_s = 60.0;
    int take = 0;
    int yield = 0;
    int transfer = 0;
    int backchannel = 0;
    int competition_win = 0;
    int competition_loss = 0;
    int turn_starts = 0;        // take + transfer
    int distinct_speakers = 0;  // unique turn takers in the window
    int switch_turns = 0;       // turn starts whose taker differs from the previous taker
};

// Tumbling half-open windows [k*w, (k+1)*w) aligned to multiples of the
// window length; an event exactly on a boundary lands in the later
// window.  Windows run contiguously from the first event to the last (or
// to horizon_s when given, and from zero when the horizon extends the
// span), so quiet stretches show up as all-zero rows.  switch_turns
// compares each turn taker with the previous taker across the whole
// record, not per window.
inline std::vector<EventCounts> window_counts(std::vector<ConversationalEvent> events,
                                              double window_s = 60.0,
                                              std::optional<double> horizon_s = {}) {
    if (window_s <= 0.0) throw ConfigError("window_counts: window length must be positive");
    if (horizon_s && *horizon_s < 0.0)
        throw ConfigError("window_counts: horizon must be nonnegative");
    detail::sort_events(events);

    if (events.empty() && !horizon_s) return {};
    std::int64_t k_first = 0;
    std::int64_t k_last = -1;  // horizon of zero: no windows
    if (!events.empty()) {
        k_first = static_cast<std::int64_t>(std::floor(events.front().time_s / window_s));
        k_last = static_cast<std::int64_t>(std::floor(events.back().time_s / window_s));
    }
    if (horizon_s) {
        k_first = std::min<std::int64_t>(k_first, 0);
        if (*horizon_s > 0.0) {
            const auto k_h =
                static_cast<std::int64_t>(std::ceil(*horizon_s / window_s)) - 1;
            k_last = std::max(k_last, k_h);
        }
    }

    std::vector<EventCounts> out;
    for (std::int64_t k = k_first; k <= k_last; ++k) {
        EventCounts c;
        c.window_start_s = static_cast<double>(k) * window_s;
        c.window_length_s = window_s;
        out.push_back(c);
    }
    if (out.empty()) return out;

    std::optional<SpeakerId> last_taker;
    for (const ConversationalEvent& e : events) {
        const auto k = static_cast<std::int64_t>(std::floor(e.time_s / window_s));
        EventCounts& c = out[static_cast<std::size_t>(k - k_first)];
        switch (e.kind) {
            case ConvKind::Take: ++c.take; break;
            case ConvKind::Yield: ++c.yield; break;
            case ConvKind::Transfer: ++c.transfer; break;
            case ConvKind::Backchannel: ++c.backchannel; break;
            case ConvKind::CompetitionWin: ++c.competition_win; break;
            case ConvKind::CompetitionLoss: ++c.competition_loss; break;
        }
        if (e.kind == ConvKind::Take || e.kind == ConvKind::Transfer) {
            ++c.turn_starts;
            const SpeakerId taker = turn_taker(e);
            if (last_taker && *last_taker != taker) ++c.switch_turns;
            last_taker = taker;
        }
    }

    // Distinct takers need a second pass per window.
    std::size_t idx = 0;
    for (EventCounts& c : out) {
        std::vector<SpeakerId> seen;
        while (idx < events.size() &&
               events[idx].time_s < c.window_start_s + window_s) {
            const ConversationalEvent& e = events[idx++];
            if (e.kind == ConvKind::Take || e.kind == ConvKind::Transfer) {
                const SpeakerId taker = turn_taker(e);
                if (std::find(seen.begin(), seen.end(), taker) == seen.end())
                    seen.push_back(taker);
            }
        }
        c.distinct_speakers = static_cast<int>(seen.size());
    }
    return out;
}

} // namespace turnmjp

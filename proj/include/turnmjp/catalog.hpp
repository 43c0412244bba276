#pragma once
// Conversational state space and the guarded event catalog.
//
// A group of C speakers has a binary turn-holding state x in {0,1}^C.
// Events move the state. For C speakers the catalog holds C^2 + 5C guarded
// events (36 when C = 4): per speaker a turn take, a turn yield, a
// backchannel, a turn seize, a yield under competition, plus a C x C
// transfer block whose diagonal means "current speaker continues".
//
// State-dependent event rates factor as guard(x) * base_rate: an event can
// fire only while its guard holds. The reaction-matrix form uses a doubled
// indicator encoding (two rows per speaker, for status 0 and status 1) so
// state updates can be written as encode(x) + A * r.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"

namespace turnmjp {

using SpeakerId = int;

// Per-speaker turn-holding status, packed as a bitmask so the 2^C joint
// state space enumerates by index. Bit c set = speaker c is speaking.
class StateVector {
public:
    StateVector() = default;
    StateVector(int speaker_count, std::uint32_t bits = 0)
        : count_(speaker_count), bits_(bits) {
        if (speaker_count < 1 || speaker_count > 20)
            throw ConfigError("StateVector: speaker count out of range");
        if (bits >> speaker_count)
            throw ConfigError("StateVector: bits outside speaker range");
    }

    static StateVector from_index(std::uint32_t index, int speaker_count) {
        return StateVector(speaker_count, index);
    }

    int speaker_count() const { return count_; }
    bool speaking(SpeakerId c) const { return (bits_ >> c) & 1u; }
    void set(SpeakerId c, bool on) {
        if (on) bits_ |= (1u << c);
        else bits_ &= ~(1u << c);
    }
    std::uint32_t index() const { return bits_; }
    int active_count() const { return __builtin_popcount(bits_); }
    bool any_speaking() const { return bits_ != 0; }

    friend bool operator==(const StateVector& a, const StateVector& b) {
        return a.count_ == b.count_ && a.bits_ == b.bits_;
    }
    friend bool operator!=(const StateVector& a, const StateVector& b) { return !(a == b); }

private:
    int count_ = 0;
    std::uint32_t bits_ = 0;
};

enum class EventKind {
    Take,             // start a turn while everyone is silent
    Yield,            // end a turn held alone
    Transfer,         // hand the turn to a target (diagonal = continue)
    Backchannel,      // short listener utterance; no state change
    Seize,            // start speaking over the sole current speaker
    YieldCompetition, // stop speaking while others still speak
};

inline const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::Take: return "take";
        case EventKind::Yield: return "yield";
        case EventKind::Transfer: return "transfer";
        case EventKind::Backchannel: return "backchannel";
        case EventKind::Seize: return "seize";
        case EventKind::YieldCompetition: return "yield-under-competition";
    }
    return "?";
}

inline EventKind event_kind_from_string(const std::string& s) {
    if (s == "take") return EventKind::Take;
    if (s == "yield") return EventKind::Yield;
    if (s == "transfer") return EventKind::Transfer;
    if (s == "backchannel") return EventKind::Backchannel;
    if (s == "seize") return EventKind::Seize;
    if (s == "yield-under-competition") return EventKind::YieldCompetition;
    throw DataError("unknown event kind: " + s);
}

struct EventSpec {
    int id = -1;
    EventKind kind = EventKind::Take;
    SpeakerId actor = 0;
    std::optional<SpeakerId> target;   // transfer only
    std::vector<std::int8_t> delta;    // per-speaker status increment

    bool guard_holds(const StateVector& x) const {
        const int c = actor;
        switch (kind) {
            case EventKind::Take:
                return !x.any_speaking();
            case EventKind::Yield:
                return x.speaking(c) && x.active_count() == 1;
            case EventKind::Transfer: {
                const int d = *target;
                if (c == d) return x.speaking(c);
                return x.speaking(c) && !x.speaking(d);
            }
            case EventKind::Backchannel:
                return x.any_speaking() && !(x.active_count() == 1 && x.speaking(c));
            case EventKind::Seize: {
                const int others = x.active_count() - (x.speaking(c) ? 1 : 0);
                return !x.speaking(c) && others == 1;
            }
            case EventKind::YieldCompetition:
                return x.speaking(c) && x.active_count() >= 2;
        }
        return false;
    }

    bool changes_state() const {
        for (std::int8_t d : delta)
            if (d != 0) return true;
        return false;
    }
};

// Rates in events/second, indexed by event id.
using RateVector = std::vector<double>;
// Event occurrence counts, indexed by event id.
using EventVector = std::vector<int>;

inline EventVector one_hot_event(int event_count, int event_id) {
    EventVector r(event_count, 0);
    r.at(event_id) = 1;
    return r;
}

class EventCatalog {
public:
    EventCatalog() = default;
    EventCatalog(int speaker_count, std::vector<EventSpec> events)
        : speaker_count_(speaker_count), events_(std::move(events)) {}

    int speaker_count() const { return speaker_count_; }
    int event_count() const { return static_cast<int>(events_.size()); }
    const EventSpec& event(int id) const { return events_.at(id); }
    const std::vector<EventSpec>& events() const { return events_; }

private:
    int speaker_count_ = 0;
    std::vector<EventSpec> events_;
};

// Catalog layout: ids are dense, ordered take | yield | transfer (row-major
// actor*C+target) | backchannel | seize | yield-under-competition.
inline EventCatalog build_catalog(int speaker_count) {
    if (speaker_count < 2)
        throw ConfigError("build_catalog: need at least 2 speakers");
    if (speaker_count > 10)
        throw ConfigError("build_catalog: at most 10 speakers supported");
    const int C = speaker_count;
    std::vector<EventSpec> events;
    events.reserve(C * C + 5 * C);

    auto push = [&](EventKind kind, SpeakerId actor, std::optional<SpeakerId> target) {
        EventSpec e;
        e.id = static_cast<int>(events.size());
        e.kind = kind;
        e.actor = actor;
        e.target = target;
        e.delta.assign(C, 0);
        switch (kind) {
            case EventKind::Take:
            case EventKind::Seize:
                e.delta[actor] = +1;
                break;
            case EventKind::Yield:
            case EventKind::YieldCompetition:
                e.delta[actor] = -1;
                break;
            case EventKind::Transfer:
                if (*target != actor) {
                    e.delta[actor] = -1;
                    e.delta[*target] = +1;
                }
                break;
            case EventKind::Backchannel:
                break;
        }
        events.push_back(std::move(e));
    };

    for (int c = 0; c < C; ++c) push(EventKind::Take, c, std::nullopt);
    for (int c = 0; c < C; ++c) push(EventKind::Yield, c, std::nullopt);
    for (int c = 0; c < C; ++c)
        for (int d = 0; d < C; ++d) push(EventKind::Transfer, c, d);
    for (int c = 0; c < C; ++c) push(EventKind::Backchannel, c, std::nullopt);
    for (int c = 0; c < C; ++c) push(EventKind::Seize, c, std::nullopt);
    for (int c = 0; c < C; ++c) push(EventKind::YieldCompetition, c, std::nullopt);

    return EventCatalog(C, std::move(events));
}

// Event ids whose guards hold at x, ascending.
inline std::vector<int> active_events(const StateVector& x, const EventCatalog& catalog) {
    if (x.speaker_count() != catalog.speaker_count())
        throw DataError("active_events: state/catalog speaker count mismatch");
    std::vector<int> ids;
    for (const EventSpec& e : catalog.events())
        if (e.guard_holds(x)) ids.push_back(e.id);
    return ids;
}

inline StateVector apply_event(const StateVector& x, const EventSpec& e) {
    if (static_cast<int>(e.delta.size()) != x.speaker_count())
        throw DataError("apply_event: state/event dimension mismatch");
    if (!e.guard_holds(x))
        throw DataError("apply_event: guard violated for event " + std::to_string(e.id));
    StateVector out = x;
    for (int c = 0; c < x.speaker_count(); ++c) {
        const int v = (x.speaking(c) ? 1 : 0) + e.delta[c];
        if (v < 0 || v > 1)
            throw DataError("apply_event: update leaves status outside {0,1}");
        out.set(c, v == 1);
    }
    return out;
}

// Doubled indicator encoding: entry 2c is the status-0 indicator of
// speaker c, entry 2c+1 the status-1 indicator.
inline std::vector<int> encode_doubled(const StateVector& x) {
    std::vector<int> v(2 * x.speaker_count());
    for (int c = 0; c < x.speaker_count(); ++c) {
        v[2 * c] = x.speaking(c) ? 0 : 1;
        v[2 * c + 1] = x.speaking(c) ? 1 : 0;
    }
    return v;
}

inline StateVector decode_doubled(const std::vector<int>& v, int speaker_count) {
    if (static_cast<int>(v.size()) != 2 * speaker_count)
        throw DataError("decode_doubled: length mismatch");
    StateVector x(speaker_count);
    for (int c = 0; c < speaker_count; ++c) {
        const int off = v[2 * c];
        const int on = v[2 * c + 1];
        if (off + on != 1 || off < 0 || on < 0)
            throw DataError("decode_doubled: indicator pair not one-hot");
        x.set(c, on == 1);
    }
    return x;
}

// 2C x V matrix over {-1,0,+1}; column v is the doubled-indicator increment
// of event v. Every column sums to zero.
class ReactionMatrix {
public:
    explicit ReactionMatrix(const EventCatalog& catalog)
        : rows_(2 * catalog.speaker_count()),
          cols_(catalog.event_count()),
          entries_(static_cast<std::size_t>(rows_) * cols_, 0) {
        for (const EventSpec& e : catalog.events()) {
            for (int c = 0; c < catalog.speaker_count(); ++c) {
                if (e.delta[c] == +1) {
                    at(2 * c, e.id) = -1;      // leaves status 0
                    at(2 * c + 1, e.id) = +1;  // enters status 1
                } else if (e.delta[c] == -1) {
                    at(2 * c, e.id) = +1;
                    at(2 * c + 1, e.id) = -1;
                }
            }
        }
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::int8_t operator()(int r, int c) const {
        return entries_[static_cast<std::size_t>(r) * cols_ + c];
    }

    int column_sum(int c) const {
        int s = 0;
        for (int r = 0; r < rows_; ++r) s += (*this)(r, c);
        return s;
    }

private:
    std::int8_t& at(int r, int c) {
        return entries_[static_cast<std::size_t>(r) * cols_ + c];
    }
    int rows_ = 0;
    int cols_ = 0;
    std::vector<std::int8_t> entries_;
};

// Matrix route: decode(encode(x) + A * r). The event counts r need not be
// one-hot; the result must be a valid indicator vector.
inline StateVector state_update(const StateVector& x, const ReactionMatrix& A, const EventVector& r) {
    if (A.cols() != static_cast<int>(r.size()) || A.rows() != 2 * x.speaker_count())
        throw DataError("state_update: dimension mismatch");
    std::vector<int> enc = encode_doubled(x);
    for (int row = 0; row < A.rows(); ++row) {
        int acc = 0;
        for (int col = 0; col < A.cols(); ++col) {
            const int a = A(row, col);
            if (a != 0 && r[col] != 0) acc += a * r[col];
        }
        enc[row] += acc;
    }
    for (int v : enc)
        if (v < 0 || v > 1)
            throw DataError("state_update: inconsistent update (indicator outside {0,1})");
    return decode_doubled(enc, x.speaker_count());
}

} // namespace turnmjp

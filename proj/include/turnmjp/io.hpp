// File formats for the pipeline: small CSV schemas (trajectories,
// observations, turn segments, events, windowed counts, badge samples,
// question-interval records) and JSON builders for fits, chains, and run
// manifests.  Readers report problems as "path:line: message"; writers
// print floats with %.17g so identical values always produce identical
// bytes and round trips are exact.

#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "turnmjp/analysis.hpp"
#include "turnmjp/catalog.hpp"
#include "turnmjp/emission.hpp"
#include "turnmjp/errors.hpp"
#include "turnmjp/events.hpp"
#include "turnmjp/infer.hpp"
#include "turnmjp/mathutil.hpp"
#include "turnmjp/segment.hpp"
#include "turnmjp/simulate.hpp"
#include "turnmjp/survival.hpp"

namespace turnmjp {

inline constexpr const char* kToolVersion = "0.1.0";

namespace detail {

inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string loc(const std::string& path, int line) {
    return path + ":" + std::to_string(line) + ": ";
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_double(const std::string& s, const std::string& path, int line) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    const auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{} || p != e)
        throw DataError(loc(path, line) + "expected a number, got '" + s + "'");
    return v;
}

inline int parse_int(const std::string& s, const std::string& path, int line) {
    int v = 0;
    const char* b = s.data();
    const char* e = b + s.size();
    const auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{} || p != e)
        throw DataError(loc(path, line) + "expected an integer, got '" + s + "'");
    return v;
}

class LineReader {
public:
    explicit LineReader(const std::string& path) : path_(path), in_(path) {
        if (!in_) throw DataError("cannot open " + path);
    }
    bool next(std::string& line) {
        if (!std::getline(in_, line)) return false;
        ++line_no_;
        return true;
    }
    int line_no() const { return line_no_; }
    const std::string& path() const { return path_; }
    [[noreturn]] void fail(const std::string& msg) const {
        throw DataError(loc(path_, line_no_) + msg);
    }

private:
    std::string path_;
    std::ifstream in_;
    int line_no_ = 0;
};

// Header-driven metadata line: "# turnmjp <what> key=value ...".
inline std::map<std::string, std::string> parse_meta(LineReader& r, const std::string& what) {
    std::string line;
    if (!r.next(line)) r.fail("empty file");
    std::istringstream ss(line);
    std::string hash, tool, got;
    ss >> hash >> tool >> got;
    if (hash != "#" || tool != "turnmjp" || got != what)
        r.fail("expected '# turnmjp " + what + "' metadata line");
    std::map<std::string, std::string> kv;
    std::string tok;
    while (ss >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) r.fail("malformed metadata token '" + tok + "'");
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return kv;
}

inline void expect_header(LineReader& r, const std::string& want) {
    std::string line;
    if (!r.next(line)) r.fail("missing header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != want) r.fail("expected header '" + want + "'");
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    return out;
}

inline double meta_double(const std::map<std::string, std::string>& kv,
                          const std::string& key, const std::string& path) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw DataError(path + ":1: missing metadata key " + key);
    return parse_double(it->second, path, 1);
}

inline int meta_int(const std::map<std::string, std::string>& kv, const std::string& key,
                    const std::string& path) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw DataError(path + ":1: missing metadata key " + key);
    return parse_int(it->second, path, 1);
}

} // namespace detail

// ---- trajectory ----------------------------------------------------------

inline void write_trajectory_csv(const std::string& path, const EventCatalog& catalog,
                                 const Trajectory& traj) {
    auto out = detail::open_out(path);
    out << "# turnmjp trajectory speakers=" << catalog.speaker_count()
        << " horizon_s=" << detail::fmt_g17(traj.horizon_s)
        << " initial_state=" << traj.initial_state.index() << "\n";
    out << "time_s,event_id,kind,actor,target\n";
    for (const TimedEvent& te : traj.events) {
        const EventSpec& e = catalog.event(te.event_id);
        out << detail::fmt_g17(te.time_s) << ',' << te.event_id << ',' << to_string(e.kind)
            << ',' << e.actor << ',';
        if (e.target) out << *e.target;
        out << "\n";
    }
}

struct LoadedTrajectory {
    Trajectory trajectory;
    int speaker_count = 0;
};

inline LoadedTrajectory read_trajectory_csv(const std::string& path) {
    detail::LineReader r(path);
    const auto meta = detail::parse_meta(r, "trajectory");
    LoadedTrajectory lt;
    lt.speaker_count = detail::meta_int(meta, "speakers", path);
    const double horizon = detail::meta_double(meta, "horizon_s", path);
    const int init_bits = detail::meta_int(meta, "initial_state", path);
    const EventCatalog cat = build_catalog(lt.speaker_count);
    lt.trajectory.initial_state =
        StateVector::from_index(static_cast<std::uint32_t>(init_bits), lt.speaker_count);
    lt.trajectory.horizon_s = horizon;

    detail::expect_header(r, "time_s,event_id,kind,actor,target");
    std::string line;
    double prev_t = 0.0;
    while (r.next(line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv(line);
        if (f.size() != 5) r.fail("expected 5 fields, got " + std::to_string(f.size()));
        TimedEvent te;
        te.time_s = detail::parse_double(f[0], path, r.line_no());
        te.event_id = detail::parse_int(f[1], path, r.line_no());
        if (te.event_id < 0 || te.event_id >= cat.event_count())
            r.fail("event id out of range: " + f[1]);
        const EventSpec& e = cat.event(te.event_id);
        if (f[2] != to_string(e.kind)) r.fail("kind does not match event id");
        if (detail::parse_int(f[3], path, r.line_no()) != e.actor)
            r.fail("actor does not match event id");
        if (e.target) {
            if (f[4].empty() || detail::parse_int(f[4], path, r.line_no()) != *e.target)
                r.fail("target does not match event id");
        } else if (!f[4].empty()) {
            r.fail("unexpected target for a non-transfer event");
        }
        if (te.time_s < prev_t) r.fail("event times must be nondecreasing");
        if (te.time_s > horizon) r.fail("event time beyond the horizon");
        prev_t = te.time_s;
        lt.trajectory.events.push_back(te);
    }
    return lt;
}

// ---- observations --------------------------------------------------------

inline void write_observations_csv(const std::string& path, const ObservationSeries& series) {
    series.validate();
    auto out = detail::open_out(path);
    out << "# turnmjp observations speakers=" << series.speaker_count
        << " dt_s=" << detail::fmt_g17(series.dt_s) << " slots=" << series.slot_count()
        << "\n";
    out << "slot,speaker,audio_logvar,motion_logvar,facing_count\n";
    for (int k = 0; k < series.slot_count(); ++k)
        for (int c = 0; c < series.speaker_count; ++c) {
            const SpeakerFrame& f = series.frames[k][c];
            out << k << ',' << c << ',';
            if (f.audio) out << detail::fmt_g17(*f.audio);
            out << ',';
            if (f.motion) out << detail::fmt_g17(*f.motion);
            out << ',';
            if (f.facing) out << detail::fmt_g17(*f.facing);
            out << "\n";
        }
}

inline ObservationSeries read_observations_csv(const std::string& path) {
    detail::LineReader r(path);
    const auto meta = detail::parse_meta(r, "observations");
    ObservationSeries series;
    series.speaker_count = detail::meta_int(meta, "speakers", path);
    series.dt_s = detail::meta_double(meta, "dt_s", path);
    const int slots = detail::meta_int(meta, "slots", path);
    if (slots < 0 || series.speaker_count < 1)
        throw DataError(path + ":1: bad slots/speakers metadata");
    series.frames.assign(slots, ObservationFrame(series.speaker_count));

    detail::expect_header(r, "slot,speaker,audio_logvar,motion_logvar,facing_count");
    std::string line;
    while (r.next(line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv(line);
        if (f.size() != 5) r.fail("expected 5 fields, got " + std::to_string(f.size()));
        const int k = detail::parse_int(f[0], path, r.line_no());
        const int c = detail::parse_int(f[1], path, r.line_no());
        if (k < 0 || k >= slots) r.fail("slot out of range: " + f[0]);
        if (c < 0 || c >= series.speaker_count) r.fail("speaker out of range: " + f[1]);
        SpeakerFrame& frame = series.frames[k][c];
        if (!f[2].empty()) frame.audio = detail::parse_double(f[2], path, r.line_no());
        if (!f[3].empty()) frame.motion = detail::parse_double(f[3], path, r.line_no());
        if (!f[4].empty()) frame.facing = detail::parse_double(f[4], path, r.line_no());
    }
    series.validate();
    return series;
}

// ---- turn segments -------------------------------------------------------

inline void write_turns_csv(const std::string& path, const std::vector<TurnSegment>& turns) {
    auto out = detail::open_out(path);
    out << "speaker,start_s,end_s,kind\n";
    for (const TurnSegment& t : turns)
        out << t.speaker << ',' << detail::fmt_g17(t.start_s) << ','
            << detail::fmt_g17(t.end_s) << ',' << to_string(t.kind) << "\n";
}

inline std::vector<TurnSegment> read_turns_csv(const std::string& path) {
    detail::LineReader r(path);
    detail::expect_header(r, "speaker,start_s,end_s,kind");
    std::vector<TurnSegment> turns;
    std::string line;
    while (r.next(line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv(line);
        if (f.size() != 4) r.fail("expected 4 fields, got " + std::to_string(f.size()));
        TurnSegment t;
        t.speaker = detail::parse_int(f[0], path, r.line_no());
        t.start_s = detail::parse_double(f[1], path, r.line_no());
        t.end_s = detail::parse_double(f[2], path, r.line_no());
        if (f[3] == "turn") t.kind = TurnKind::Turn;
        else if (f[3] == "backchannel-candidate") t.kind = TurnKind::BackchannelCandidate;
        else r.fail("unknown turn kind '" + f[3] + "'");
        if (!(t.end_s > t.start_s)) r.fail("segment must have positive length");
        turns.push_back(t);
    }
    return turns;
}

// ---- conversational events -----------------------------------------------

inline void write_events_csv(const std::string& path,
                             const std::vector<ConversationalEvent>& events) {
    auto out = detail::open_out(path);
    out << "time_s,kind,actor,target\n";
    for (const ConversationalEvent& e : events) {
        out << detail::fmt_g17(e.time_s) << ',' << to_string(e.kind) << ',' << e.actor << ',';
        if (e.target) out << *e.target;
        out << "\n";
    }
}

inline std::vector<ConversationalEvent> read_events_csv(const std::string& path) {
    detail::LineReader r(path);
    detail::expect_header(r, "time_s,kind,actor,target");
    std::vector<ConversationalEvent> events;
    std::string line;
    while (r.next(line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv(line);
        if (f.size() != 4) r.fail("expected 4 fields, got " + std::to_string(f.size()));
        ConversationalEvent e;
        e.time_s = detail::parse_double(f[0], path, r.line_no());
        try {
            e.kind = conv_kind_from_string(f[1]);
        } catch (const DataError&) {
            r.fail("unknown event kind '" + f[1] + "'");
        }
        e.actor = detail::parse_int(f[2], path, r.line_no());
        if (!f[3].empty()) e.target = detail::parse_int(f[3], path, r.line_no());
        if ((e.kind == ConvKind::Transfer) != e.target.has_value())
            r.fail("target must be present exactly for transfers");
        events.push_back(e);
    }
    return events;
}

// ---- windowed counts -------------------------------------------------------

inline void write_counts_csv(const std::string& path, const std::vector<EventCounts>& counts) {
    auto out = detail::open_out(path);
    const double w = counts.empty() ? 60.0 : counts.front().window_length_s;
    out << "# turnmjp counts window_s=" << detail::fmt_g17(w) << "\n";
    out << "window_start_s,take,transfer,yield,backchannel,competition,distinct_speakers,"
           "switch_turns\n";
    for (const EventCounts& c : counts)
        out << detail::fmt_g17(c.window_start_s) << ',' << c.take << ',' << c.transfer << ','
            << c.yield << ',' << c.backchannel << ',' << c.competition_win << ','
            << c.distinct_speakers << ',' << c.switch_turns << "\n";
}

inline std::vector<EventCounts> read_counts_csv(const std::string& path) {
    detail::LineReader r(path);
    const auto meta = detail::parse_meta(r, "counts");
    const double w = detail::meta_double(meta, "window_s", path);
    detail::expect_header(
        r, "window_start_s,take,transfer,yield,backchannel,competition,distinct_speakers,"
           "switch_turns");
    std::vector<EventCounts> counts;
    std::string line;
    while (r.next(line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv(line);
        if (f.size() != 8) r.fail("expected 8 fields, got " + std::to_string(f.size()));
        EventCounts c;
        c.window_start_s = detail::parse_double(f[0], path, r.line_no());
        c.window_length_s = w;
        c.take = detail::parse_int(f[1], path, r.line_no());
        c.transfer = detail::parse_int(f[2], path, r.line_no());
        c.yield = detail::parse_int(f[3], path, r.line_no());
        c.backchannel = detail::parse_int(f[4], path, r.line_no());
        c.competition_win = c.competition_loss = detail::parse_int(f[5], path, r.line_no());
        c.distinct_speakers = detail::parse_int(f[6], path, r.line_no());
        c.switch_turns = detail::parse_int(f[7], path, r.line_no());
        c.turn_starts = c.take + c.transfer;
        for (int v : {c.take, c.transfer, c.yield, c.backchannel, c.competition_win,
                      c.distinct_speakers, c.switch_turns})
            if (v < 0) r.fail("counts must be nonnegative");
        counts.push_back(c);
    }
    return counts;
}

// ---- raw badge samples -----------------------------------------------------

inline void write_badges_csv(const std::string& path,
                             const std::vector<RawBadgeSeries>& badges) {
    auto out = detail::open_out(path);
    out << "badge_id,t_s,audio_var,motion_var,ir_ids\n";
    for (const RawBadgeSeries& b : badges)
        for (const BadgeSample& s : b.samples) {
            out << b.badge_id << ',' << detail::fmt_g17(s.t_s) << ','
                << detail::fmt_g17(s.audio_var) << ',' << detail::fmt_g17(s.motion_var) << ',';
            for (std::size_t i = 0; i < s.ir_ids.size(); ++i) {
                if (i) out << ';';
                out << s.ir_ids[i];
            }
            out << "\n";
        }
}

inline std::vector<RawBadgeSeries> read_badges_csv(const std::string& path) {
    detail::LineReader r(path);
    detail::expect_header(r, "badge_id,t_s,audio_var,motion_var,ir_ids");
    std::vector<RawBadgeSeries> badges;
    std::string line;
    while (r.next(line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv(line);
        if (f.size() != 5) r.fail("expected 5 fields, got " + std::to_string(f.size()));
        const int id = detail::parse_int(f[0], path, r.line_no());
        BadgeSample s;
        s.t_s = detail::parse_double(f[1], path, r.line_no());
        s.audio_var = detail::parse_double(f[2], path, r.line_no());
        s.motion_var = detail::parse_double(f[3], path, r.line_no());
        if (!f[4].empty()) {
            std::string tok;
            std::istringstream ss(f[4]);
            while (std::getline(ss, tok, ';'))
                s.ir_ids.push_back(detail::parse_int(tok, path, r.line_no()));
        }
        RawBadgeSeries* series = nullptr;
        for (RawBadgeSeries& b : badges)
            if (b.badge_id == id) series = &b;
        if (!series) {
            badges.push_back({});
            badges.back().badge_id = id;
            series = &badges.back();
        }
        if (!series->samples.empty() && s.t_s < series->samples.back().t_s)
            r.fail("badge timestamps must be nondecreasing");
        series->samples.push_back(s);
    }
    // Sample period: median spacing, per badge.
    for (RawBadgeSeries& b : badges) {
        std::vector<double> gaps;
        for (std::size_t i = 1; i < b.samples.size(); ++i)
            gaps.push_back(b.samples[i].t_s - b.samples[i - 1].t_s);
        b.sample_period_s = gaps.empty() ? 0.0 : percentile_interp(gaps, 50.0);
        b.validate();
    }
    return badges;
}

// ---- question-interval survival records ------------------------------------

struct QuestionIntervalRow {
    double fraction_before = 1.0;  // remaining share of the answer space
    double fraction_after = 1.0;
    double interval_s = 0.0;
    std::array<double, 4> rates{};  // take, transfer, backchannel, competition (per s)
};

inline void write_survival_records_csv(const std::string& path,
                                       const std::vector<QuestionIntervalRow>& rows) {
    auto out = detail::open_out(path);
    out << "fraction_remaining_before,fraction_remaining_after,interval_s,rate_take,"
           "rate_transfer,rate_backchannel,rate_competition\n";
    for (const QuestionIntervalRow& q : rows) {
        out << detail::fmt_g17(q.fraction_before) << ',' << detail::fmt_g17(q.fraction_after)
            << ',' << detail::fmt_g17(q.interval_s);
        for (double v : q.rates) out << ',' << detail::fmt_g17(v);
        out << "\n";
    }
}

// A fraction pair over an interval is converted to an equivalent-duration
// record: remaining share f = exp(-lambda * T) implies a mean lifetime
// T / ln(1/f), fed to the fitter as an uncensored duration.  A question
// that removed nothing is right-censored at the interval length.
inline SurvivalRecord survival_record_from_fractions(double before, double after,
                                                     double interval_s,
                                                     const std::array<double, 4>& rates) {
    if (!(before > 0.0 && before <= 1.0) || !(after > 0.0 && after <= before))
        throw DataError("fractions must satisfy 0 < after <= before <= 1");
    if (!(interval_s > 0.0)) throw DataError("interval must be positive");
    SurvivalRecord rec;
    rec.covariates.assign(rates.begin(), rates.end());
    if (after == before) {
        rec.duration_s = interval_s;
        rec.censored = true;
    } else {
        rec.duration_s = interval_s / std::log(before / after);
        rec.censored = false;
    }
    return rec;
}

inline std::vector<SurvivalRecord> read_survival_records_csv(const std::string& path) {
    detail::LineReader r(path);
    detail::expect_header(
        r, "fraction_remaining_before,fraction_remaining_after,interval_s,rate_take,"
           "rate_transfer,rate_backchannel,rate_competition");
    std::vector<SurvivalRecord> records;
    std::string line;
    while (r.next(line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv(line);
        if (f.size() != 7) r.fail("expected 7 fields, got " + std::to_string(f.size()));
        std::array<double, 4> rates{};
        for (int j = 0; j < 4; ++j)
            rates[j] = detail::parse_double(f[3 + j], path, r.line_no());
        try {
            records.push_back(survival_record_from_fractions(
                detail::parse_double(f[0], path, r.line_no()),
                detail::parse_double(f[1], path, r.line_no()),
                detail::parse_double(f[2], path, r.line_no()), rates));
        } catch (const DataError& e) {
            r.fail(e.what());
        }
    }
    return records;
}

// ---- group directories -----------------------------------------------------

// A group lives in its own directory: counts.csv plus group.json holding
// at least {"group_id": ..., "questions": N}.
inline GroupRecord read_group_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path counts_path = fs::path(dir) / "counts.csv";
    const fs::path meta_path = fs::path(dir) / "group.json";
    if (!fs::exists(counts_path)) throw DataError("missing file: " + counts_path.string());
    if (!fs::exists(meta_path)) throw DataError("missing file: " + meta_path.string());

    GroupRecord g;
    g.windows = read_counts_csv(counts_path.string());

    std::ifstream in(meta_path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(meta_path.string() + ": invalid JSON: " + e.what());
    }
    if (!j.contains("questions") || !j["questions"].is_number_integer())
        throw DataError(meta_path.string() + ": missing integer field 'questions'");
    g.questions = j["questions"].get<int>();
    g.group_id = j.value("group_id", fs::path(dir).filename().string());
    if (j.contains("member_turn_fractions"))
        g.member_turn_fractions = j["member_turn_fractions"].get<std::vector<double>>();
    g.validate();
    return g;
}

inline std::vector<GroupRecord> read_groups(const std::string& root) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root)) throw DataError("not a directory: " + root);
    std::vector<std::string> subdirs;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory()) subdirs.push_back(entry.path().string());
    std::sort(subdirs.begin(), subdirs.end());
    if (subdirs.empty()) throw DataError("no group directories under " + root);
    std::vector<GroupRecord> groups;
    for (const std::string& d : subdirs) groups.push_back(read_group_dir(d));
    return groups;
}

// ---- JSON builders ---------------------------------------------------------

inline nlohmann::json hazard_fit_json(const HazardFit& fit) {
    nlohmann::json j;
    j["baseline"] = fit.baseline;
    j["betas"] = fit.beta;
    j["multiplicative"] = fit.multiplicative;
    j["loglik"] = fit.loglik;
    j["variance_explained"] = fit.variance_explained;
    j["unidentifiable"] = fit.unidentifiable;
    j["baseline_only"] = fit.baseline_only;
    j["iterations"] = fit.ll_trace.size();
    return j;
}

inline nlohmann::json chain_json(const EventCatalog& catalog, const Chain& chain) {
    nlohmann::json rates = nlohmann::json::array();
    for (std::size_t id = 0; id < chain.rate_summary.size(); ++id) {
        const EventSpec& e = catalog.event(static_cast<int>(id));
        nlohmann::json row;
        row["event_id"] = id;
        row["kind"] = to_string(e.kind);
        row["actor"] = e.actor;
        if (e.target) row["target"] = *e.target;
        row["mean"] = chain.rate_summary[id].mean;
        row["sd"] = chain.rate_summary[id].sd;
        row["psrf"] = chain.rate_summary[id].psrf;
        rates.push_back(row);
    }
    nlohmann::json j;
    j["speakers"] = catalog.speaker_count();
    j["samples"] = chain.samples.size();
    j["rates"] = rates;
    j["sweep_loglik"] = chain.sweep_loglik;
    return j;
}

inline nlohmann::json manifest_json(const std::string& command, std::uint64_t seed,
                                    double dt_s, const nlohmann::json& params,
                                    std::uint64_t config_hash) {
    nlohmann::json j;
    j["tool"] = "turnmjp";
    j["version"] = kToolVersion;
    j["command"] = command;
    j["seed"] = seed;
    j["dt_s"] = dt_s;
    j["params"] = params;
    j["config_fnv64"] = config_hash;
    return j;
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
    auto out = detail::open_out(path);
    out << j.dump(2) << "\n";
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": invalid JSON: " + e.what());
    }
    return j;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace turnmjp

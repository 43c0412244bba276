// File-format round trips: every writer/reader pair must reproduce the
// original structures exactly, and rewriting what was read must give
// byte-identical files.  Malformed input has to be reported with the
// offending file and line number.

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "turnmjp/analysis.hpp"
#include "turnmjp/io.hpp"
#include "turnmjp/rng.hpp"
#include "turnmjp/simulate.hpp"

using namespace turnmjp;
using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

// Scratch directory per test run; removed when the helper dies.
struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("turnmjp_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_raw(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

Trajectory sample_trajectory(const EventCatalog& cat, std::uint64_t seed) {
    Rng rng(seed);
    return gillespie_simulate(cat, default_conversation_rates(), StateVector(4), 90.0, rng);
}

} // namespace

TEST_CASE("trajectory CSV round trips byte for byte", "[io]") {
    TempDir tmp;
    const EventCatalog cat = build_catalog(4);
    const Trajectory traj = sample_trajectory(cat, 11);
    REQUIRE(traj.events.size() > 20);

    const std::string a = tmp.file("a.csv");
    const std::string b = tmp.file("b.csv");
    write_trajectory_csv(a, cat, traj);

    const LoadedTrajectory lt = read_trajectory_csv(a);
    REQUIRE(lt.speaker_count == 4);
    REQUIRE(lt.trajectory.horizon_s == traj.horizon_s);
    REQUIRE(lt.trajectory.initial_state.index() == traj.initial_state.index());
    REQUIRE(lt.trajectory.events.size() == traj.events.size());
    for (std::size_t i = 0; i < traj.events.size(); ++i) {
        CHECK(lt.trajectory.events[i].time_s == traj.events[i].time_s);
        CHECK(lt.trajectory.events[i].event_id == traj.events[i].event_id);
    }

    write_trajectory_csv(b, cat, lt.trajectory);
    CHECK(read_text_file(a) == read_text_file(b));

    // Writing the same structure twice is also stable.
    write_trajectory_csv(b, cat, traj);
    CHECK(read_text_file(a) == read_text_file(b));
}

TEST_CASE("trajectory CSV rejects inconsistent rows", "[io]") {
    TempDir tmp;
    const std::string p = tmp.file("t.csv");
    const std::string header =
        "# turnmjp trajectory speakers=2 horizon_s=10 initial_state=0\n"
        "time_s,event_id,kind,actor,target\n";

    write_raw(p, header + "0.5,0,take,0,\n0.4,1,take,1,\n");
    CHECK_THROWS_WITH(read_trajectory_csv(p), ContainsSubstring("t.csv:4"));
    CHECK_THROWS_WITH(read_trajectory_csv(p), ContainsSubstring("nondecreasing"));

    write_raw(p, header + "0.5,99,take,0,\n");
    CHECK_THROWS_WITH(read_trajectory_csv(p), ContainsSubstring("out of range"));

    write_raw(p, header + "0.5,0,yield,0,\n");
    CHECK_THROWS_WITH(read_trajectory_csv(p), ContainsSubstring("kind does not match"));

    write_raw(p, header + "0.5,0,take,0,1\n");
    CHECK_THROWS_WITH(read_trajectory_csv(p), ContainsSubstring("non-transfer"));

    write_raw(p, header + "20,0,take,0,\n");
    CHECK_THROWS_WITH(read_trajectory_csv(p), ContainsSubstring("beyond the horizon"));

    write_raw(p, "# turnmjp counts window_s=60\n");
    CHECK_THROWS_WITH(read_trajectory_csv(p), ContainsSubstring("t.csv:1"));
}

TEST_CASE("observations CSV preserves holes and round trips", "[io]") {
    TempDir tmp;
    ObservationSeries series;
    series.speaker_count = 3;
    series.dt_s = 0.1;
    series.frames.assign(4, ObservationFrame(3));
    Rng rng(5);
    for (int k = 0; k < 4; ++k)
        for (int c = 0; c < 3; ++c) {
            SpeakerFrame& f = series.frames[k][c];
            if (rng.uniform(0.0, 1.0) < 0.7) f.audio = rng.normal(-1.0, 1.0);
            if (rng.uniform(0.0, 1.0) < 0.7) f.motion = rng.normal(-0.5, 1.0);
            if (rng.uniform(0.0, 1.0) < 0.7) f.facing = rng.uniform_int(3);
        }
    series.frames[2][1] = SpeakerFrame{};  // fully missing speaker-slot

    const std::string a = tmp.file("obs_a.csv");
    const std::string b = tmp.file("obs_b.csv");
    write_observations_csv(a, series);
    const ObservationSeries back = read_observations_csv(a);

    REQUIRE(back.speaker_count == 3);
    REQUIRE(back.dt_s == 0.1);
    REQUIRE(back.slot_count() == 4);
    for (int k = 0; k < 4; ++k)
        for (int c = 0; c < 3; ++c)
            for (int ch = 0; ch < kEmissionDims; ++ch)
                CHECK(back.frames[k][c].channel(ch) == series.frames[k][c].channel(ch));

    write_observations_csv(b, back);
    CHECK(read_text_file(a) == read_text_file(b));
}

TEST_CASE("observations CSV bounds checks slots and speakers", "[io]") {
    TempDir tmp;
    const std::string p = tmp.file("obs.csv");
    const std::string header =
        "# turnmjp observations speakers=2 dt_s=0.1 slots=3\n"
        "slot,speaker,audio_logvar,motion_logvar,facing_count\n";

    write_raw(p, header + "3,0,-1,,\n");
    CHECK_THROWS_WITH(read_observations_csv(p), ContainsSubstring("slot out of range"));

    write_raw(p, header + "0,2,-1,,\n");
    CHECK_THROWS_WITH(read_observations_csv(p), ContainsSubstring("speaker out of range"));

    write_raw(p, header + "0,0,-1,nope,\n");
    CHECK_THROWS_WITH(read_observations_csv(p), ContainsSubstring("obs.csv:3"));
    CHECK_THROWS_WITH(read_observations_csv(p), ContainsSubstring("expected a number"));
}

TEST_CASE("turns and events CSVs round trip", "[io]") {
    TempDir tmp;
    std::vector<TurnSegment> turns = {
        {0, 0.0, 2.5, TurnKind::Turn},
        {1, 2.9, 5.0, TurnKind::Turn},
        {2, 3.1, 3.4, TurnKind::BackchannelCandidate},
    };
    const std::string tp = tmp.file("turns.csv");
    write_turns_csv(tp, turns);
    const auto turns_back = read_turns_csv(tp);
    REQUIRE(turns_back.size() == turns.size());
    for (std::size_t i = 0; i < turns.size(); ++i) {
        CHECK(turns_back[i].speaker == turns[i].speaker);
        CHECK(turns_back[i].start_s == turns[i].start_s);
        CHECK(turns_back[i].end_s == turns[i].end_s);
        CHECK(turns_back[i].kind == turns[i].kind);
    }

    const auto events = classify_events(turns, 1.0);
    REQUIRE_FALSE(events.empty());
    const std::string ea = tmp.file("events_a.csv");
    const std::string eb = tmp.file("events_b.csv");
    write_events_csv(ea, events);
    const auto events_back = read_events_csv(ea);
    REQUIRE(events_back.size() == events.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
        CHECK(events_back[i].kind == events[i].kind);
        CHECK(events_back[i].actor == events[i].actor);
        CHECK(events_back[i].target == events[i].target);
        CHECK(events_back[i].time_s == events[i].time_s);
    }
    write_events_csv(eb, events_back);
    CHECK(read_text_file(ea) == read_text_file(eb));

    write_raw(tp, "time_s,kind,actor,target\n1.0,transfer,0,\n");
    CHECK_THROWS_WITH(read_events_csv(tp), ContainsSubstring("exactly for transfers"));
    write_raw(tp, "time_s,kind,actor,target\n1.0,chat,0,\n");
    CHECK_THROWS_WITH(read_events_csv(tp), ContainsSubstring("unknown event kind"));
}

TEST_CASE("counts CSV keeps window length and derived totals", "[io]") {
    TempDir tmp;
    const EventCatalog cat = build_catalog(4);
    const Trajectory traj = sample_trajectory(cat, 21);
    const auto events = classify_trajectory(cat, traj);
    const auto counts = window_counts(events, 30.0, traj.horizon_s);
    REQUIRE(counts.size() == 3);

    const std::string a = tmp.file("counts_a.csv");
    const std::string b = tmp.file("counts_b.csv");
    write_counts_csv(a, counts);
    const auto back = read_counts_csv(a);
    REQUIRE(back.size() == counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        CHECK(back[i].window_start_s == counts[i].window_start_s);
        CHECK(back[i].window_length_s == 30.0);
        CHECK(back[i].take == counts[i].take);
        CHECK(back[i].transfer == counts[i].transfer);
        CHECK(back[i].yield == counts[i].yield);
        CHECK(back[i].backchannel == counts[i].backchannel);
        CHECK(back[i].competition_win == counts[i].competition_win);
        CHECK(back[i].competition_loss == counts[i].competition_win);
        CHECK(back[i].distinct_speakers == counts[i].distinct_speakers);
        CHECK(back[i].switch_turns == counts[i].switch_turns);
        CHECK(back[i].turn_starts == back[i].take + back[i].transfer);
    }
    write_counts_csv(b, back);
    CHECK(read_text_file(a) == read_text_file(b));

    write_raw(a, "# turnmjp counts window_s=60\nwindow_start_s,take\n");
    CHECK_THROWS_WITH(read_counts_csv(a), ContainsSubstring("expected header"));
}

TEST_CASE("badge CSV reconstructs per-badge series and sample period", "[io]") {
    TempDir tmp;
    std::vector<RawBadgeSeries> badges(2);
    Rng rng(7);
    for (int b = 0; b < 2; ++b) {
        badges[b].badge_id = b + 10;
        badges[b].sample_period_s = 0.05;
        for (int i = 0; i < 40; ++i) {
            BadgeSample s;
            s.t_s = 0.05 * i + (b ? 0.013 : 0.0);
            s.audio_var = std::abs(rng.normal(0.3, 0.1));
            s.motion_var = std::abs(rng.normal(0.1, 0.05));
            if (i % 7 == 0) s.ir_ids = {b == 0 ? 11 : 10, 99};
            badges[b].samples.push_back(s);
        }
    }
    const std::string p = tmp.file("badges.csv");
    write_badges_csv(p, badges);
    const auto back = read_badges_csv(p);
    REQUIRE(back.size() == 2);
    for (int b = 0; b < 2; ++b) {
        CHECK(back[b].badge_id == badges[b].badge_id);
        CHECK_THAT(back[b].sample_period_s, Catch::Matchers::WithinAbs(0.05, 1e-12));
        REQUIRE(back[b].samples.size() == badges[b].samples.size());
        for (std::size_t i = 0; i < badges[b].samples.size(); ++i) {
            CHECK(back[b].samples[i].t_s == badges[b].samples[i].t_s);
            CHECK(back[b].samples[i].audio_var == badges[b].samples[i].audio_var);
            CHECK(back[b].samples[i].ir_ids == badges[b].samples[i].ir_ids);
        }
    }

    write_raw(p, "badge_id,t_s,audio_var,motion_var,ir_ids\n1,2.0,0.1,0.1,\n1,1.0,0.1,0.1,\n");
    CHECK_THROWS_WITH(read_badges_csv(p), ContainsSubstring("badges.csv:3"));
}

TEST_CASE("question-interval rows convert to survival records", "[io]") {
    const std::array<double, 4> rates = {0.6, 0.1, 0.3, 0.05};

    // Shrinking by half over 10s is one mean lifetime of 10/ln 2.
    SurvivalRecord rec = survival_record_from_fractions(1.0, 0.5, 10.0, rates);
    CHECK_FALSE(rec.censored);
    CHECK_THAT(rec.duration_s, Catch::Matchers::WithinRel(10.0 / std::log(2.0), 1e-12));
    REQUIRE(rec.covariates.size() == 4);
    CHECK(rec.covariates[0] == 0.6);
    CHECK(rec.covariates[3] == 0.05);

    // No progress at all: censored at the interval length.
    rec = survival_record_from_fractions(0.4, 0.4, 7.5, rates);
    CHECK(rec.censored);
    CHECK(rec.duration_s == 7.5);

    CHECK_THROWS_AS(survival_record_from_fractions(0.0, 0.0, 1.0, rates), DataError);
    CHECK_THROWS_AS(survival_record_from_fractions(0.5, 0.6, 1.0, rates), DataError);
    CHECK_THROWS_AS(survival_record_from_fractions(1.0, 0.5, 0.0, rates), DataError);
    CHECK_THROWS_AS(survival_record_from_fractions(1.2, 0.5, 1.0, rates), DataError);
}

TEST_CASE("survival records CSV feeds the fitter with exact durations", "[io]") {
    TempDir tmp;
    // All rows share the same covariates and a known hazard, and the
    // fractions are exact exponential survivals, so every converted
    // duration equals 1/lambda and the covariate-free MLE is exact.
    const double lambda = 0.04;
    std::vector<QuestionIntervalRow> rows;
    for (int i = 1; i <= 12; ++i) {
        QuestionIntervalRow q;
        q.interval_s = 5.0 * i;
        q.fraction_before = 1.0;
        q.fraction_after = std::exp(-lambda * q.interval_s);
        q.rates = {0.0, 0.0, 0.0, 0.0};
        rows.push_back(q);
    }
    const std::string p = tmp.file("records.csv");
    write_survival_records_csv(p, rows);
    const auto records = read_survival_records_csv(p);
    REQUIRE(records.size() == rows.size());
    for (const SurvivalRecord& r : records)
        CHECK_THAT(r.duration_s, Catch::Matchers::WithinRel(1.0 / lambda, 1e-9));

    const HazardFit fit = fit_hazard(records);
    CHECK(fit.baseline_only);
    CHECK_THAT(fit.baseline, Catch::Matchers::WithinRel(lambda, 1e-6));

    write_raw(p,
              "fraction_remaining_before,fraction_remaining_after,interval_s,rate_take,"
              "rate_transfer,rate_backchannel,rate_competition\n"
              "1.0,0.5,10,0,0,0,0\n"
              "0.5,0.9,10,0,0,0,0\n");
    CHECK_THROWS_WITH(read_survival_records_csv(p), ContainsSubstring("records.csv:3"));
}

TEST_CASE("group directories load sorted with explicit missing-file errors", "[io]") {
    TempDir tmp;
    const EventCatalog cat = build_catalog(4);
    for (int g = 0; g < 2; ++g) {
        const fs::path dir = tmp.path / ("group_" + std::to_string(g));
        fs::create_directories(dir);
        const Trajectory traj = sample_trajectory(cat, 100 + g);
        const auto counts = window_counts(classify_trajectory(cat, traj), 60.0, traj.horizon_s);
        write_counts_csv((dir / "counts.csv").string(), counts);
        nlohmann::json meta;
        meta["group_id"] = "g" + std::to_string(g);
        meta["questions"] = 12 + g;
        write_json_file((dir / "group.json").string(), meta);
    }

    const auto groups = read_groups(tmp.path.string());
    REQUIRE(groups.size() == 2);
    CHECK(groups[0].group_id == "g0");
    CHECK(groups[0].questions == 12);
    CHECK(groups[1].questions == 13);
    CHECK(groups[0].windows.size() == 2);

    fs::remove(tmp.path / "group_1" / "counts.csv");
    CHECK_THROWS_WITH(read_groups(tmp.path.string()),
                      ContainsSubstring("missing file") &&
                          ContainsSubstring("group_1/counts.csv"));

    write_counts_csv((tmp.path / "group_1" / "counts.csv").string(), {});
    fs::remove(tmp.path / "group_1" / "group.json");
    CHECK_THROWS_WITH(read_groups(tmp.path.string()),
                      ContainsSubstring("group_1/group.json"));

    fs::remove_all(tmp.path / "group_0");
    fs::remove_all(tmp.path / "group_1");
    CHECK_THROWS_WITH(read_groups(tmp.path.string()), ContainsSubstring("no group"));
    CHECK_THROWS_AS(read_groups(tmp.file("nope")), DataError);
}

TEST_CASE("JSON outputs are stable and carry fit and chain summaries", "[io]") {
    TempDir tmp;
    nlohmann::json params;
    params["minutes"] = 5;
    const auto manifest = manifest_json("simulate", 42, 0.1, params, 0xabcdefULL);
    CHECK(manifest["tool"] == "turnmjp");
    CHECK(manifest["seed"] == 42);
    CHECK(manifest["dt_s"] == 0.1);
    CHECK(manifest["params"]["minutes"] == 5);
    CHECK(manifest["config_fnv64"] == 0xabcdefULL);

    const std::string a = tmp.file("m_a.json");
    const std::string b = tmp.file("m_b.json");
    write_json_file(a, manifest);
    write_json_file(b, manifest);
    CHECK(read_text_file(a) == read_text_file(b));
    CHECK(read_json_file(a) == manifest);

    // Round trip through parse and re-dump is also byte stable.
    write_json_file(b, read_json_file(a));
    CHECK(read_text_file(a) == read_text_file(b));

    write_raw(a, "{ not json");
    CHECK_THROWS_WITH(read_json_file(a), ContainsSubstring("invalid JSON"));

    const EventCatalog cat = build_catalog(2);
    Chain chain;
    chain.rate_summary.assign(cat.event_count(), RateSummary{0.5, 0.1, 1.01});
    chain.sweep_loglik = {-10.0, -9.5};
    const auto cj = chain_json(cat, chain);
    CHECK(cj["speakers"] == 2);
    CHECK(cj["rates"].size() == static_cast<std::size_t>(cat.event_count()));
    CHECK(cj["rates"][0]["kind"] == to_string(cat.event(0).kind));
    CHECK(cj["sweep_loglik"].size() == 2);
}

// turnmjp: file-based pipeline driver.
//
//   simulate  draw a conversation and its sensor observations
//   infer     posterior rates from an observation CSV (Gibbs)
//   segment   raw badge samples -> aligned turn segments + observations
//   extract   turns or a trajectory -> conversational events + counts
//   survival  question-interval records -> hazard fit
//   table1    group directories -> percentile profiles + fitted rates
//   tasksim   play seeded twenty-questions games
//   report    table + survival fit + regression over group directories
//
// Every command is deterministic given --seed/--config and writes a
// <command>_manifest.json that names its outputs and carries a hash of
// the effective parameters.  Exit codes: 0 ok, 1 usage/config, 2 bad
// data, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "turnmjp/analysis.hpp"
#include "turnmjp/catalog.hpp"
#include "turnmjp/emission.hpp"
#include "turnmjp/errors.hpp"
#include "turnmjp/events.hpp"
#include "turnmjp/infer.hpp"
#include "turnmjp/io.hpp"
#include "turnmjp/mathutil.hpp"
#include "turnmjp/rng.hpp"
#include "turnmjp/segment.hpp"
#include "turnmjp/simulate.hpp"
#include "turnmjp/survival.hpp"
#include "turnmjp/tasksim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace turnmjp;

namespace {

struct Global {
    std::uint64_t seed = 12345;
    double dt_s = 0.1;
    std::string config_path;
    std::string out_dir = ".";
    json config = json::object();

    std::string out(const std::string& name) const {
        fs::create_directories(out_dir);
        return (fs::path(out_dir) / name).string();
    }
};

// Config file < command line.  A value from --config applies only when
// the flag was not given explicitly.
template <typename T>
void cfg_override(const json& cfg, const char* key, const CLI::Option* opt, T& dst) {
    if (opt != nullptr && opt->count() > 0) return;
    if (cfg.contains(key)) {
        try {
            dst = cfg.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config key '") + key + "': " + e.what());
        }
    }
}

void write_manifest(const Global& g, const std::string& command, const json& params,
                    const std::vector<std::string>& outputs) {
    json effective = params;
    effective["seed"] = g.seed;
    effective["dt_s"] = g.dt_s;
    json m = manifest_json(command, g.seed, g.dt_s, params, fnv1a64(effective.dump()));
    json names = json::array();
    for (const std::string& o : outputs) names.push_back(fs::path(o).filename().string());
    m["outputs"] = names;
    write_json_file(g.out(command + "_manifest.json"), m);
}

// The calibrated per-speaker knobs; sized to whatever catalog is asked for.
RateVector conversation_rates(const EventCatalog& cat) {
    if (cat.speaker_count() == 4) return default_conversation_rates();
    RateVector r(static_cast<std::size_t>(cat.event_count()), 0.0);
    for (const EventSpec& e : cat.events()) {
        switch (e.kind) {
            case EventKind::Take: r[e.id] = 0.5388; break;
            case EventKind::Yield: r[e.id] = 0.8; break;
            case EventKind::Transfer: r[e.id] = e.actor == *e.target ? 0.0 : 0.01; break;
            case EventKind::Backchannel: r[e.id] = 0.1366; break;
            case EventKind::Seize: r[e.id] = 0.03146; break;
            case EventKind::YieldCompetition: r[e.id] = 2.0; break;
        }
    }
    return r;
}

// ---- simulate --------------------------------------------------------------

int cmd_simulate(const Global& g, double minutes, int speakers, double missing_prob) {
    if (!(minutes > 0.0)) throw ConfigError("simulate: --minutes must be positive");
    const EventCatalog cat = build_catalog(speakers);
    const RateVector rates = conversation_rates(cat);
    const int slots = static_cast<int>(std::llround(minutes * 60.0 / g.dt_s));

    Rng rng(g.seed);
    Rng path_rng = rng.fork(1);
    const SlotTrajectory slot =
        slotted_simulate(cat, rates, StateVector(speakers), slots, g.dt_s, path_rng);
    const Trajectory traj = to_trajectory(slot);

    Rng obs_rng = rng.fork(2);
    const ObservationSeries series = generate_observations(
        cat, slot, default_emission_params(speakers), obs_rng, missing_prob);

    const std::string traj_path = g.out("trajectory.csv");
    const std::string obs_path = g.out("observations.csv");
    write_trajectory_csv(traj_path, cat, traj);
    write_observations_csv(obs_path, series);

    json params = {{"minutes", minutes}, {"speakers", speakers},
                   {"missing_prob", missing_prob}};
    write_manifest(g, "simulate", params, {traj_path, obs_path});
    std::cout << "simulate: " << traj.events.size() << " events over " << slots
              << " slots -> " << g.out_dir << "\n";
    return 0;
}

// ---- infer -----------------------------------------------------------------

int cmd_infer(const Global& g, const std::string& obs_path, int sweeps, int burn_in,
              int thinning, int chains) {
    if (chains < 1) throw ConfigError("infer: --chains must be >= 1");
    const ObservationSeries series = read_observations_csv(obs_path);
    const EventCatalog cat = build_catalog(series.speaker_count);

    std::vector<Chain> runs;
    for (int c = 0; c < chains; ++c) {
        GibbsConfig cfg;
        cfg.sweeps = sweeps;
        cfg.burn_in = burn_in;
        cfg.thinning = thinning;
        cfg.dt_s = series.dt_s;
        cfg.seed = g.seed + static_cast<std::uint64_t>(c);
        runs.push_back(run_chain(series, cat, cfg));
    }

    // Pooled posterior summary; with several chains the PSRF compares the
    // chains to each other instead of split halves of one.
    const int V = cat.event_count();
    json rate_rows = json::array();
    const std::string rates_path = g.out("rates.csv");
    {
        auto out = detail::open_out(rates_path);
        out << "event_id,kind,actor,target,mean,sd,psrf\n";
        for (int i = 0; i < V; ++i) {
            std::vector<std::vector<double>> per_chain;
            std::vector<double> all;
            for (const Chain& ch : runs) {
                std::vector<double> xs;
                for (const PosteriorSample& s : ch.samples) xs.push_back(s.rates[i]);
                all.insert(all.end(), xs.begin(), xs.end());
                per_chain.push_back(std::move(xs));
            }
            double mu = 0.0;
            for (double x : all) mu += x;
            mu /= static_cast<double>(all.size());
            double var = 0.0;
            for (double x : all) var += (x - mu) * (x - mu);
            const double sd =
                all.size() > 1 ? std::sqrt(var / (static_cast<double>(all.size()) - 1.0)) : 0.0;
            const double psrf =
                chains >= 2 ? psrf_segments(per_chain) : runs[0].rate_summary[i].psrf;

            const EventSpec& e = cat.event(i);
            out << i << ',' << to_string(e.kind) << ',' << e.actor << ',';
            if (e.target) out << *e.target;
            out << ',' << detail::fmt_g17(mu) << ',' << detail::fmt_g17(sd) << ','
                << detail::fmt_g17(psrf) << "\n";

            json row = {{"event_id", i}, {"kind", to_string(e.kind)}, {"actor", e.actor},
                        {"mean", mu},    {"sd", sd},                  {"psrf", psrf}};
            if (e.target) row["target"] = *e.target;
            rate_rows.push_back(row);
        }
    }

    json j;
    j["speakers"] = series.speaker_count;
    j["chains"] = chains;
    j["sweeps"] = sweeps;
    j["burn_in"] = burn_in;
    j["thinning"] = thinning;
    j["rates"] = rate_rows;
    json traces = json::array();
    for (const Chain& ch : runs) traces.push_back(ch.sweep_loglik);
    j["sweep_loglik"] = traces;
    const std::string chain_path = g.out("chain.json");
    write_json_file(chain_path, j);

    json params = {{"observations", obs_path}, {"sweeps", sweeps}, {"burn_in", burn_in},
                   {"thinning", thinning},     {"chains", chains}};
    write_manifest(g, "infer", params, {chain_path, rates_path});
    std::cout << "infer: " << chains << " chain(s), " << runs[0].samples.size()
              << " retained sweeps each -> " << g.out_dir << "\n";
    return 0;
}

// ---- segment ---------------------------------------------------------------

int cmd_segment(const Global& g, const std::string& badges_path, double threshold_s,
                double min_turn_s, double backchannel_max_s, double pitch_percentile) {
    const std::vector<RawBadgeSeries> badges = read_badges_csv(badges_path);
    const AlignedSeries aligned = align_streams(badges);

    std::vector<PitchSegment> pitched;
    std::vector<double> gaps;
    for (const RawBadgeSeries& b : aligned.badges) {
        const std::vector<PitchSegment> spans = detect_pitched(b, pitch_percentile);
        for (std::size_t i = 1; i < spans.size(); ++i)
            gaps.push_back(spans[i].start_s - spans[i - 1].end_s);
        pitched.insert(pitched.end(), spans.begin(), spans.end());
    }

    json mixture_info;
    double threshold = threshold_s;
    if (threshold <= 0.0) {
        const GapMixture mix = fit_gap_mixture(gaps);
        threshold = mix.threshold_s;
        mixture_info = {{"mean_log", {mix.mean_log[0], mix.mean_log[1]}},
                        {"var_log", {mix.var_log[0], mix.var_log[1]}},
                        {"weight", {mix.weight[0], mix.weight[1]}},
                        {"threshold_s", mix.threshold_s},
                        {"single_component", mix.single_component}};
    }

    const SegmentationResult seg =
        segment_turns(pitched, threshold, min_turn_s, backchannel_max_s);
    const ObservationSeries series = build_observations(aligned, g.dt_s);

    const std::string turns_path = g.out("turns.csv");
    const std::string obs_path = g.out("observations.csv");
    write_turns_csv(turns_path, seg.segments);
    write_observations_csv(obs_path, series);

    json j;
    j["badges"] = badges.size();
    j["offsets_s"] = aligned.offsets_s;
    j["peak_correlation"] = aligned.peak_correlation;
    j["low_confidence"] = aligned.low_confidence;
    j["break_threshold_s"] = threshold;
    if (!mixture_info.is_null()) j["gap_mixture"] = mixture_info;
    j["segments"] = seg.segments.size();
    j["dropped_mid"] = seg.dropped_mid;
    j["dropped_short"] = seg.dropped_short;
    const std::string report_path = g.out("segment.json");
    write_json_file(report_path, j);

    json params = {{"badges", badges_path},
                   {"threshold_s", threshold_s},
                   {"min_turn_s", min_turn_s},
                   {"backchannel_max_s", backchannel_max_s},
                   {"pitch_percentile", pitch_percentile}};
    write_manifest(g, "segment", params, {turns_path, obs_path, report_path});
    std::cout << "segment: " << seg.segments.size() << " segments, break threshold "
              << threshold << " s -> " << g.out_dir << "\n";
    return 0;
}

// ---- extract ---------------------------------------------------------------

int cmd_extract(const Global& g, const std::string& turns_path,
                const std::string& traj_path, double window_s, double gap_s) {
    if (turns_path.empty() == traj_path.empty())
        throw ConfigError("extract: give exactly one of --turns or --trajectory");

    std::vector<ConversationalEvent> events;
    double horizon = 0.0;
    if (!turns_path.empty()) {
        const std::vector<TurnSegment> turns = read_turns_csv(turns_path);
        events = classify_events(turns, gap_s);
        for (const TurnSegment& t : turns) horizon = std::max(horizon, t.end_s);
    } else {
        const LoadedTrajectory lt = read_trajectory_csv(traj_path);
        const EventCatalog cat = build_catalog(lt.speaker_count);
        events = classify_trajectory(cat, lt.trajectory);
        horizon = lt.trajectory.horizon_s;
    }
    const std::vector<EventCounts> counts = window_counts(events, window_s, horizon);

    const std::string events_path = g.out("events.csv");
    const std::string counts_path = g.out("counts.csv");
    write_events_csv(events_path, events);
    write_counts_csv(counts_path, counts);

    json params = {{"turns", turns_path}, {"trajectory", traj_path},
                   {"window_s", window_s}, {"gap_s", gap_s}};
    write_manifest(g, "extract", params, {events_path, counts_path});
    std::cout << "extract: " << events.size() << " events in " << counts.size()
              << " windows -> " << g.out_dir << "\n";
    return 0;
}

// ---- survival ----------------------------------------------------------------

int cmd_survival(const Global& g, const std::string& records_path, bool multiplicative) {
    const std::vector<SurvivalRecord> records = read_survival_records_csv(records_path);
    const HazardFit fit = fit_hazard(records, multiplicative);

    json j = hazard_fit_json(fit);
    j["records"] = records.size();
    j["covariate_names"] =
        json::array({"rate_take", "rate_transfer", "rate_backchannel", "rate_competition"});
    const std::string fit_path = g.out("fit.json");
    write_json_file(fit_path, j);

    json params = {{"records", records_path}, {"multiplicative", multiplicative}};
    write_manifest(g, "survival", params, {fit_path});
    std::cout << "survival: baseline " << fit.baseline << ", loglik " << fit.loglik
              << " -> " << g.out_dir << "\n";
    return 0;
}

// ---- table1 / report ---------------------------------------------------------

json percentile_row_json(const PercentileRates& pr, const EventCatalog& cat) {
    double take = 0.0, seize = 0.0, backchannel = 0.0;
    for (const EventSpec& e : cat.events()) {
        if (e.actor != 0) continue;
        if (e.kind == EventKind::Take) take = pr.rates[e.id];
        if (e.kind == EventKind::Seize) seize = pr.rates[e.id];
        if (e.kind == EventKind::Backchannel) backchannel = pr.rates[e.id];
    }
    const RateProfile& p = pr.band_profile;
    json j;
    j["percentile"] = pr.percentile;
    j["profile"] = {{"turn_taking", p.turn_taking},
                    {"turn_competitions", p.turn_competitions},
                    {"backchannels", p.backchannels},
                    {"switch_turns", p.switch_turns},
                    {"distinct_speakers", p.distinct_speakers}};
    j["fitted_rates"] = {{"take", take}, {"seize", seize}, {"backchannel", backchannel}};
    return j;
}

std::string percentile_table_text(const std::vector<json>& rows) {
    std::string text =
        "percentile  turns/min  competitions/min  backchannels/min  switches/min  "
        "distinct\n";
    char buf[160];
    for (const json& r : rows) {
        const json& p = r.at("profile");
        std::snprintf(buf, sizeof buf, "%9d%%  %9.2f  %16.2f  %16.2f  %12.2f  %8.2f\n",
                      r.at("percentile").get<int>(), p.at("turn_taking").get<double>(),
                      p.at("turn_competitions").get<double>(),
                      p.at("backchannels").get<double>(),
                      p.at("switch_turns").get<double>(),
                      p.at("distinct_speakers").get<double>());
        text += buf;
    }
    return text;
}

std::vector<json> build_percentile_rows(const std::vector<GroupRecord>& groups,
                                        const CalibrationOptions& opts) {
    const EventCatalog cat = build_catalog(4);
    std::vector<json> rows;
    for (int p : {25, 50, 75})
        rows.push_back(percentile_row_json(percentile_rates(groups, p, opts), cat));
    return rows;
}

int cmd_table1(const Global& g, const std::string& groups_dir, CalibrationOptions opts) {
    opts.seed = g.seed;
    const std::vector<GroupRecord> groups = read_groups(groups_dir);
    const std::vector<json> rows = build_percentile_rows(groups, opts);

    json j;
    j["groups"] = groups.size();
    j["rows"] = rows;
    const std::string json_path = g.out("table1.json");
    const std::string text_path = g.out("table1.txt");
    write_json_file(json_path, j);
    {
        auto out = detail::open_out(text_path);
        out << percentile_table_text(rows);
    }

    json params = {{"groups", groups_dir},
                   {"replicates", opts.replicates},
                   {"minutes", opts.minutes},
                   {"rounds", opts.rounds},
                   {"bisection_steps", opts.bisection_steps}};
    write_manifest(g, "table1", params, {json_path, text_path});
    std::cout << "table1: " << groups.size() << " groups -> " << g.out_dir << "\n";
    return 0;
}

// Per-group regressors for the report: per-minute means over the group's
// windows, in the order turn starts, competitions, backchannels.
Eigen::MatrixXd group_design(const std::vector<GroupRecord>& groups) {
    Eigen::MatrixXd x(groups.size(), 3);
    for (std::size_t i = 0; i < groups.size(); ++i) {
        double starts = 0.0, comps = 0.0, backs = 0.0, mins = 0.0;
        for (const EventCounts& w : groups[i].windows) {
            starts += w.turn_starts;
            comps += w.competition_win;
            backs += w.backchannel;
            mins += w.window_length_s / 60.0;
        }
        x(i, 0) = starts / mins;
        x(i, 1) = comps / mins;
        x(i, 2) = backs / mins;
    }
    return x;
}

int cmd_report(const Global& g, const std::string& groups_dir,
               const std::string& records_path, CalibrationOptions opts) {
    opts.seed = g.seed;
    const std::vector<GroupRecord> groups = read_groups(groups_dir);
    const std::vector<json> rows = build_percentile_rows(groups, opts);

    json j;
    j["groups"] = groups.size();
    j["table"] = rows;
    std::string text = "== percentile profiles ==\n" + percentile_table_text(rows);

    if (!records_path.empty()) {
        const std::vector<SurvivalRecord> records =
            read_survival_records_csv(records_path);
        const HazardFit fit = fit_hazard(records);
        j["survival"] = hazard_fit_json(fit);
        j["survival"]["records"] = records.size();
        char buf[200];
        std::snprintf(buf, sizeof buf,
                      "\n== hazard fit (%zu records) ==\nbaseline %.6g\n",
                      records.size(), fit.baseline);
        text += buf;
        static const char* names[] = {"rate_take", "rate_transfer", "rate_backchannel",
                                      "rate_competition"};
        for (std::size_t k = 0; k < fit.beta.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%-18s %.6g%s\n",
                          k < 4 ? names[k] : "covariate", fit.beta[k],
                          k < fit.unidentifiable.size() && fit.unidentifiable[k]
                              ? "  (no variation)"
                              : "");
            text += buf;
        }
    }

    // Questions-to-solve regressed on discussion statistics; the nested F
    // test asks whether competitions and backchannels add anything over
    // plain turn-taking volume.
    if (groups.size() >= 5) {
        Eigen::VectorXd y(groups.size());
        for (std::size_t i = 0; i < groups.size(); ++i) y(i) = groups[i].questions;
        const Eigen::MatrixXd x = group_design(groups);
        try {
            const OlsFit full = ols_fit(x, y);
            const OlsFit restricted = ols_fit(x.leftCols(1), y);
            const FTestResult ft =
                nested_f_test(restricted, full, static_cast<int>(groups.size()));
            j["regression"] = {
                {"names", {"turn_taking", "turn_competitions", "backchannels"}},
                {"coefficients", full.coefficients},
                {"r_squared", full.r_squared},
                {"restricted_r_squared", restricted.r_squared},
                {"f", ft.f},
                {"p_value", ft.p_value},
                {"df1", ft.df1},
                {"df2", ft.df2}};
            char buf[200];
            std::snprintf(buf, sizeof buf,
                          "\n== questions ~ discussion statistics ==\nr^2 %.4f "
                          "(turn-taking only: %.4f), F(%d,%d) = %.3f, p = %.4f\n",
                          full.r_squared, restricted.r_squared, ft.df1, ft.df2, ft.f,
                          ft.p_value);
            text += buf;
        } catch (const DataError& e) {
            j["regression"] = {{"error", e.what()}};
            text += std::string("\nregression skipped: ") + e.what() + "\n";
        }
    } else {
        j["regression"] = {{"error", "need at least 5 groups"}};
    }

    const std::string json_path = g.out("report.json");
    const std::string text_path = g.out("report.txt");
    write_json_file(json_path, j);
    {
        auto out = detail::open_out(text_path);
        out << text;
    }

    json params = {{"groups", groups_dir},
                   {"records", records_path},
                   {"replicates", opts.replicates},
                   {"minutes", opts.minutes},
                   {"rounds", opts.rounds},
                   {"bisection_steps", opts.bisection_steps}};
    write_manifest(g, "report", params, {json_path, text_path});
    std::cout << "report: " << groups.size() << " groups -> " << g.out_dir << "\n";
    return 0;
}

// ---- tasksim -----------------------------------------------------------------

int cmd_tasksim(const Global& g, int games, double quality) {
    if (games < 1) throw ConfigError("tasksim: --games must be >= 1");
    Rng rng(g.seed);
    json per_game = json::array();
    double total_questions = 0.0;
    int solved = 0, aborted = 0, bad = 0;
    std::vector<int> histogram(kQuestionLimit + 1, 0);
    for (int i = 0; i < games; ++i) {
        const std::uint64_t board_seed = rng.fork(2 * i).seed();
        const std::uint64_t play_seed = rng.fork(2 * i + 1).seed();
        const GameLog log = play_game(new_game(board_seed), quality, play_seed);
        total_questions += log.question_count;
        solved += log.solved ? 1 : 0;
        aborted += log.aborted ? 1 : 0;
        histogram[log.question_count] += 1;
        json remaining = json::array();
        int bad_here = 0;
        for (const QuestionRecord& q : log.questions) {
            remaining.push_back({q.remaining_before, q.remaining_after});
            bad_here += q.bad ? 1 : 0;
        }
        bad += bad_here;
        per_game.push_back({{"questions", log.question_count},
                            {"solved", log.solved},
                            {"bad", bad_here},
                            {"remaining", remaining}});
    }

    json j;
    j["games"] = games;
    j["quality"] = quality;
    j["mean_questions"] = total_questions / games;
    j["solved"] = solved;
    j["aborted"] = aborted;
    j["bad_questions"] = bad;
    j["histogram"] = histogram;
    j["per_game"] = per_game;
    const std::string games_path = g.out("games.json");
    write_json_file(games_path, j);

    json params = {{"games", games}, {"quality", quality}};
    write_manifest(g, "tasksim", params, {games_path});
    std::cout << "tasksim: mean " << total_questions / games << " questions over " << games
              << " games -> " << g.out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    Global g;
    CLI::App app{"turn-taking jump-process pipeline"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--seed", g.seed, "random seed (default 12345)");
    app.add_option("--dt", g.dt_s, "slot length in seconds (default 0.1)");
    app.add_option("--config", g.config_path, "JSON file with option defaults");
    app.add_option("--out", g.out_dir, "output directory (default .)");

    // simulate
    double sim_minutes = 10.0, sim_missing = 0.0;
    int sim_speakers = 4;
    CLI::App* sim = app.add_subcommand("simulate", "draw a conversation + observations");
    auto* o_min = sim->add_option("--minutes", sim_minutes, "session length");
    auto* o_spk = sim->add_option("--speakers", sim_speakers, "participants");
    auto* o_miss = sim->add_option("--missing", sim_missing, "per-channel dropout prob");

    // infer
    std::string inf_obs;
    int inf_sweeps = 2000, inf_burn = 500, inf_thin = 1, inf_chains = 1;
    CLI::App* inf = app.add_subcommand("infer", "posterior rates from observations");
    inf->add_option("--observations", inf_obs, "observation CSV")->required();
    auto* o_sweeps = inf->add_option("--sweeps", inf_sweeps, "Gibbs sweeps");
    auto* o_burn = inf->add_option("--burn", inf_burn, "burn-in sweeps");
    auto* o_thin = inf->add_option("--thin", inf_thin, "thinning stride");
    auto* o_chains = inf->add_option("--chains", inf_chains, "independent chains");

    // segment
    std::string seg_badges;
    double seg_threshold = 0.0, seg_min_turn = 1.5, seg_bc_max = 1.0, seg_pct = 90.0;
    CLI::App* seg = app.add_subcommand("segment", "badge samples -> turns");
    seg->add_option("--badges", seg_badges, "raw badge CSV")->required();
    auto* o_thr = seg->add_option("--threshold", seg_threshold,
                                  "break threshold in s (0 = fit from gaps)");
    auto* o_mt = seg->add_option("--min-turn", seg_min_turn, "minimum turn length");
    auto* o_bc = seg->add_option("--backchannel-max", seg_bc_max, "backchannel bound");
    auto* o_pp = seg->add_option("--pitch-percentile", seg_pct, "audio energy cut");

    // extract
    std::string ext_turns, ext_traj;
    double ext_window = 60.0, ext_gap = 1.0;
    CLI::App* ext = app.add_subcommand("extract", "turns/trajectory -> events + counts");
    ext->add_option("--turns", ext_turns, "turn CSV");
    ext->add_option("--trajectory", ext_traj, "trajectory CSV");
    auto* o_win = ext->add_option("--window", ext_window, "count window in s");
    auto* o_gap = ext->add_option("--gap", ext_gap, "transfer gap bound in s");

    // survival
    std::string sur_records;
    bool sur_mult = false;
    CLI::App* sur = app.add_subcommand("survival", "question records -> hazard fit");
    sur->add_option("--records", sur_records, "question-interval CSV")->required();
    sur->add_flag("--multiplicative", sur_mult, "exp-link instead of additive");

    // table1 / report share calibration options
    CalibrationOptions tab_opts;
    std::string tab_groups, rep_groups, rep_records;
    CLI::App* tab = app.add_subcommand("table1", "group dirs -> percentile table");
    tab->add_option("--groups", tab_groups, "directory of group directories")->required();
    auto* o_reps = tab->add_option("--replicates", tab_opts.replicates, "per evaluation");
    auto* o_cmin = tab->add_option("--cal-minutes", tab_opts.minutes, "per replicate");
    auto* o_rounds = tab->add_option("--rounds", tab_opts.rounds, "calibration rounds");
    auto* o_steps = tab->add_option("--steps", tab_opts.bisection_steps, "bisection steps");

    CLI::App* rep = app.add_subcommand("report", "table + survival + regression");
    rep->add_option("--groups", rep_groups, "directory of group directories")->required();
    rep->add_option("--records", rep_records, "question-interval CSV (optional)");
    auto* r_reps = rep->add_option("--replicates", tab_opts.replicates, "per evaluation");
    auto* r_cmin = rep->add_option("--cal-minutes", tab_opts.minutes, "per replicate");
    auto* r_rounds = rep->add_option("--rounds", tab_opts.rounds, "calibration rounds");
    auto* r_steps = rep->add_option("--steps", tab_opts.bisection_steps, "bisection steps");

    // tasksim
    int tk_games = 1000;
    double tk_quality = 0.7;
    CLI::App* tsk = app.add_subcommand("tasksim", "play twenty-questions games");
    auto* o_games = tsk->add_option("--games", tk_games, "number of games");
    auto* o_quality = tsk->add_option("--quality", tk_quality, "question quality in [0,1]");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (!g.config_path.empty()) {
            g.config = read_json_file(g.config_path);
            if (!g.config.is_object())
                throw ConfigError("config file must hold a JSON object");
        }
        const json& cfg = g.config;

        if (sim->parsed()) {
            cfg_override(cfg, "minutes", o_min, sim_minutes);
            cfg_override(cfg, "speakers", o_spk, sim_speakers);
            cfg_override(cfg, "missing", o_miss, sim_missing);
            return cmd_simulate(g, sim_minutes, sim_speakers, sim_missing);
        }
        if (inf->parsed()) {
            cfg_override(cfg, "sweeps", o_sweeps, inf_sweeps);
            cfg_override(cfg, "burn", o_burn, inf_burn);
            cfg_override(cfg, "thin", o_thin, inf_thin);
            cfg_override(cfg, "chains", o_chains, inf_chains);
            return cmd_infer(g, inf_obs, inf_sweeps, inf_burn, inf_thin, inf_chains);
        }
        if (seg->parsed()) {
            cfg_override(cfg, "threshold", o_thr, seg_threshold);
            cfg_override(cfg, "min_turn", o_mt, seg_min_turn);
            cfg_override(cfg, "backchannel_max", o_bc, seg_bc_max);
            cfg_override(cfg, "pitch_percentile", o_pp, seg_pct);
            return cmd_segment(g, seg_badges, seg_threshold, seg_min_turn, seg_bc_max,
                               seg_pct);
        }
        if (ext->parsed()) {
            cfg_override(cfg, "window", o_win, ext_window);
            cfg_override(cfg, "gap", o_gap, ext_gap);
            return cmd_extract(g, ext_turns, ext_traj, ext_window, ext_gap);
        }
        if (sur->parsed()) return cmd_survival(g, sur_records, sur_mult);
        if (tab->parsed()) {
            cfg_override(cfg, "replicates", o_reps, tab_opts.replicates);
            cfg_override(cfg, "cal_minutes", o_cmin, tab_opts.minutes);
            cfg_override(cfg, "rounds", o_rounds, tab_opts.rounds);
            cfg_override(cfg, "steps", o_steps, tab_opts.bisection_steps);
            return cmd_table1(g, tab_groups, tab_opts);
        }
        if (rep->parsed()) {
            cfg_override(cfg, "replicates", r_reps, tab_opts.replicates);
            cfg_override(cfg, "cal_minutes", r_cmin, tab_opts.minutes);
            cfg_override(cfg, "rounds", r_rounds, tab_opts.rounds);
            cfg_override(cfg, "steps", r_steps, tab_opts.bisection_steps);
            return cmd_report(g, rep_groups, rep_records, tab_opts);
        }
        if (tsk->parsed()) {
            cfg_override(cfg, "games", o_games, tk_games);
            cfg_override(cfg, "quality", o_quality, tk_quality);
            return cmd_tasksim(g, tk_games, tk_quality);
        }
        throw ConfigError("no subcommand selected");
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

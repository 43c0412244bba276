// End-to-end acceptance checks for the assembled library and CLI.  Each
// numbered check prints a single [PASS]/[FAIL] line with timing; the
// process exits nonzero if anything failed.  Run with the CLI binary as
// the only argument:
//
//   turnmjp_acceptance /path/to/turnmjp

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "turnmjp/analysis.hpp"
#include "turnmjp/catalog.hpp"
#include "turnmjp/emission.hpp"
#include "turnmjp/events.hpp"
#include "turnmjp/infer.hpp"
#include "turnmjp/io.hpp"
#include "turnmjp/mathutil.hpp"
#include "turnmjp/rng.hpp"
#include "turnmjp/segment.hpp"
#include "turnmjp/simulate.hpp"
#include "turnmjp/survival.hpp"
#include "turnmjp/tasksim.hpp"

using namespace turnmjp;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

struct Check {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& why) {
        if (!ok && pass) {
            pass = false;
            detail = why;
        }
    }
    void note(const std::string& text) {
        if (pass) detail = text;
    }
};

template <typename Fn>
void criterion(int num, const std::string& name, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Check c;
    try {
        fn(c);
    } catch (const std::exception& e) {
        c.pass = false;
        c.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %2d. %s (%.2f s)%s%s\n", c.pass ? "PASS" : "FAIL", num, name.c_str(),
                secs, c.detail.empty() ? "" : " -- ", c.detail.c_str());
    std::fflush(stdout);
    if (!c.pass) ++g_failures;
}

// ---- shared fixtures ---------------------------------------------------

// Recovery fixture. Rates are kept low enough that per-slot event
// probabilities stay small (the rate draw inverts them with the small-p
// formula), while every floor-moving kind still fires a few hundred times
// in 30 minutes. Self-transfers are switched off and backchannels kept
// rare: neither moves the state, so their rates are not identifiable from
// status observations alone.
RateVector recovery_rates(const EventCatalog& cat) {
    RateVector r(cat.event_count(), 0.0);
    for (const EventSpec& e : cat.events()) {
        switch (e.kind) {
            case EventKind::Take: r[e.id] = 0.3; break;
            case EventKind::Yield: r[e.id] = 0.5; break;
            case EventKind::Transfer: r[e.id] = (*e.target == e.actor) ? 0.0 : 0.11; break;
            case EventKind::Backchannel: r[e.id] = 0.002; break;
            case EventKind::Seize: r[e.id] = 0.16; break;
            case EventKind::YieldCompetition: r[e.id] = 0.5; break;
        }
    }
    return r;
}

RateVector toy_rates(const EventCatalog& cat) {
    RateVector r(cat.event_count(), 0.0);
    for (const EventSpec& e : cat.events()) {
        switch (e.kind) {
            case EventKind::Take: r[e.id] = 0.4; break;
            case EventKind::Yield: r[e.id] = 0.5; break;
            case EventKind::Transfer: r[e.id] = (*e.target == e.actor) ? 0.1 : 0.15; break;
            case EventKind::Backchannel: r[e.id] = 0.2; break;
            case EventKind::Seize: r[e.id] = 0.05; break;
            case EventKind::YieldCompetition: r[e.id] = 0.8; break;
        }
    }
    return r;
}

EmissionParams separated_params(int C, double gap, double sd) {
    EmissionParams p;
    p.by_speaker.resize(C);
    for (int c = 0; c < C; ++c)
        for (int st = 0; st < 2; ++st) {
            p.at(c, st).mean = Eigen::Vector3d(st * gap, st * gap * 0.5, st * gap * 0.25);
            p.at(c, st).cov = sd * sd * Eigen::Matrix3d::Identity();
        }
    return p;
}

RawBadgeSeries bursty_series(int badge_id, double t0, int n, Rng& rng) {
    RawBadgeSeries s;
    s.badge_id = badge_id;
    s.sample_period_s = 0.05;
    double burst_until = -1.0;
    for (int i = 0; i < n; ++i) {
        const double t = t0 + i * s.sample_period_s;
        if (t > burst_until && rng.u01() < 0.01) burst_until = t + rng.uniform(0.3, 1.0);
        BadgeSample smp;
        smp.t_s = t;
        smp.audio_var = t <= burst_until ? 5.0 + rng.u01() : rng.u01();
        smp.motion_var = rng.u01();
        s.samples.push_back(smp);
    }
    return s;
}

RawBadgeSeries shifted_copy(const RawBadgeSeries& src, int badge_id, double shift_s) {
    RawBadgeSeries out = src;
    out.badge_id = badge_id;
    for (BadgeSample& s : out.samples) s.t_s += shift_s;
    return out;
}

// Signed-rank p by brute force over all 2^n sign assignments, with its own
// mid-rank computation.
double oracle_wilcoxon_p(const std::vector<double>& diffs, bool one_sided) {
    std::vector<double> mags;
    for (double d : diffs)
        if (d != 0.0) mags.push_back(std::fabs(d));
    const int n = static_cast<int>(mags.size());
    std::vector<double> ranks(n);
    for (int i = 0; i < n; ++i) {
        int less = 0, equal = 0;
        for (int j = 0; j < n; ++j) {
            if (mags[j] < mags[i]) ++less;
            if (mags[j] == mags[i]) ++equal;
        }
        ranks[i] = less + (equal + 1) / 2.0;
    }
    double w_obs = 0.0;
    std::vector<double> kept;
    for (double d : diffs)
        if (d != 0.0) kept.push_back(d);
    for (int i = 0; i < n; ++i)
        if (kept[i] > 0.0) w_obs += ranks[i];

    long ge = 0, le = 0;
    const long total = 1L << n;
    for (long mask = 0; mask < total; ++mask) {
        double w = 0.0;
        for (int i = 0; i < n; ++i)
            if (mask & (1L << i)) w += ranks[i];
        if (w >= w_obs) ++ge;
        if (w <= w_obs) ++le;
    }
    const double upper = static_cast<double>(ge) / static_cast<double>(total);
    const double lower = static_cast<double>(le) / static_cast<double>(total);
    if (one_sided) return upper;
    return std::min(1.0, 2.0 * std::min(lower, upper));
}

// ---- CLI plumbing for the determinism criterion --------------------------

int run_cli(const std::string& cli, const std::string& args) {
    const std::string cmd = cli + " " + args + " > /dev/null";
    const int rc = std::system(cmd.c_str());
    if (rc == -1) return -1;
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

bool dirs_identical(const fs::path& a, const fs::path& b, std::string& why) {
    std::vector<fs::path> ra, rb;
    for (const auto& e : fs::recursive_directory_iterator(a))
        if (e.is_regular_file()) ra.push_back(fs::relative(e.path(), a));
    for (const auto& e : fs::recursive_directory_iterator(b))
        if (e.is_regular_file()) rb.push_back(fs::relative(e.path(), b));
    std::sort(ra.begin(), ra.end());
    std::sort(rb.begin(), rb.end());
    if (ra != rb) {
        why = "file lists differ under " + a.string();
        return false;
    }
    for (const fs::path& rel : ra)
        if (read_text_file((a / rel).string()) != read_text_file((b / rel).string())) {
            why = "bytes differ: " + rel.string();
            return false;
        }
    return true;
}

} // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";

    criterion(1, "catalog cardinality: four speakers give 36 events", [](Check& c) {
        const EventCatalog cat = build_catalog(4);
        c.require(cat.event_count() == 36,
                  "event_count = " + std::to_string(cat.event_count()));
        c.note("build_catalog(4).event_count() == 36");
    });

    criterion(2, "state algebra: matrix route equals direct updates", [](Check& c) {
        long checked = 0;
        for (int C = 2; C <= 4; ++C) {
            const EventCatalog cat = build_catalog(C);
            const ReactionMatrix A(cat);
            for (std::uint32_t s = 0; s < (1u << C); ++s) {
                const StateVector x = StateVector::from_index(s, C);
                for (const EventSpec& e : cat.events()) {
                    if (!e.guard_holds(x)) continue;
                    EventVector r(cat.event_count(), 0);
                    r[e.id] = 1;
                    const StateVector direct = apply_event(x, e);
                    const StateVector via_matrix = state_update(x, A, r);
                    c.require(direct.index() == via_matrix.index(),
                              "mismatch at C=" + std::to_string(C));
                    for (int i = 0; i < C; ++i)
                        c.require(direct.speaking(i) == via_matrix.speaking(i),
                                  "component mismatch");
                    ++checked;
                }
            }
        }
        const EventCatalog cat = build_catalog(4);
        const ReactionMatrix A(cat);
        Rng rng(404);
        for (int t = 0; t < 100000; ++t) {
            const StateVector x = StateVector::from_index(rng.uniform_int(16), 4);
            std::vector<int> active;
            for (const EventSpec& e : cat.events())
                if (e.guard_holds(x)) active.push_back(e.id);
            const int id = active[rng.uniform_int(static_cast<int>(active.size()))];
            EventVector r(cat.event_count(), 0);
            r[id] = 1;
            if (apply_event(x, cat.event(id)).index() != state_update(x, A, r).index()) {
                c.require(false, "random one-hot mismatch at event " +
                                     std::to_string(id));
                break;
            }
            ++checked;
        }
        c.note(std::to_string(checked) + " exhaustive + random cases agree");
    });

    criterion(3, "slot distributions are normalized", [](Check& c) {
        const EventCatalog cat = build_catalog(4);
        Rng rng(7);
        double worst = 0.0;
        for (int t = 0; t < 10000; ++t) {
            const StateVector x = StateVector::from_index(rng.uniform_int(16), 4);
            RateVector rates(cat.event_count());
            for (double& v : rates) v = rng.u01() < 0.2 ? 0.0 : rng.uniform(0.0, 3.0);
            const double dt = std::exp(rng.uniform(std::log(1e-4), std::log(1.0)));
            const double total = slot_event_distribution(cat, x, rates, dt).total();
            worst = std::max(worst, std::fabs(total - 1.0));
        }
        c.require(worst <= 1e-12, "worst |total-1| = " + std::to_string(worst));
        char buf[64];
        std::snprintf(buf, sizeof buf, "worst |total-1| = %.2e over 10^4 triples", worst);
        c.note(buf);
    });

    criterion(4, "slotted counts track the exact simulator", [](Check& c) {
        const EventCatalog cat = build_catalog(4);
        const RateVector rates = default_conversation_rates();
        const double dt = 0.01, horizon = 1000.0;
        const int reps = 60;
        std::vector<long> slotted(cat.event_count(), 0), exact(cat.event_count(), 0);
        Rng rng(11);
        for (int r = 0; r < reps; ++r) {
            Rng a = rng.fork(2 * r), b = rng.fork(2 * r + 1);
            const SlotTrajectory st = slotted_simulate(
                cat, rates, StateVector(4), static_cast<int>(horizon / dt), dt, a);
            for (int id : st.slot_events)
                if (id != kNoEvent) slotted[id] += 1;
            const Trajectory gt = gillespie_simulate(cat, rates, StateVector(4), horizon, b);
            for (const TimedEvent& e : gt.events) exact[e.event_id] += 1;
        }
        int compared = 0;
        double worst = 0.0;
        for (int id = 0; id < cat.event_count(); ++id) {
            const double expected = static_cast<double>(exact[id]) / reps;
            if (expected < 50.0) continue;
            const double rel = std::fabs(static_cast<double>(slotted[id]) - exact[id]) /
                               static_cast<double>(exact[id]);
            worst = std::max(worst, rel);
            ++compared;
            c.require(rel <= 0.05, to_string(cat.event(id).kind) +
                                       std::string(" off by ") + std::to_string(rel));
        }
        c.require(compared >= 8, "only " + std::to_string(compared) + " event types");
        char buf[96];
        std::snprintf(buf, sizeof buf,
                      "%d event types with mean count >= 50/1000 s, worst gap %.1f%%",
                      compared, 100.0 * worst);
        c.note(buf);
    });

    criterion(5, "posterior recovers rates and emissions from observations", [](Check& c) {
        const int C = 4;
        const EventCatalog cat = build_catalog(C);
        const RateVector truth = recovery_rates(cat);
        const EmissionParams params = separated_params(C, 3.0, 1.0);
        const double dt = 0.1;

        Rng sim(505);
        const SlotTrajectory traj =
            slotted_simulate(cat, truth, StateVector(C), 18000, dt, sim);
        const ObservationSeries series = generate_observations(cat, traj, params, sim);

        EventVector occurrences(cat.event_count(), 0);
        for (int id : traj.slot_events)
            if (id != kNoEvent) occurrences[id] += 1;

        // Exposure: slots whose predecessor state had the guard active.
        std::vector<double> exposure(cat.event_count(), 0.0);
        {
            std::vector<StateVector> xs = states_during(traj, cat);
            xs.insert(xs.begin(), traj.initial_state);
            xs.pop_back();
            for (const StateVector& x : xs)
                for (const EventSpec& e : cat.events())
                    if (e.guard_holds(x)) exposure[e.id] += 1.0;
        }

        GibbsConfig cfg;
        cfg.sweeps = 2000;
        cfg.burn_in = 500;
        cfg.dt_s = dt;
        cfg.seed = 99;
        const Chain chain = run_chain(series, cat, cfg);

        // Rates are judged per event type (take, yield, ...), pooling the
        // per-event posterior means with exposure weights from the true path.
        int rated = 0;
        double worst_rate = 0.0;
        for (int k = 0; k < 6; ++k) {
            const EventKind kind = static_cast<EventKind>(k);
            long occ = 0;
            double w_total = 0.0, truth_sum = 0.0, est_sum = 0.0;
            for (const EventSpec& e : cat.events()) {
                if (e.kind != kind) continue;
                occ += occurrences[e.id];
                w_total += exposure[e.id];
                truth_sum += exposure[e.id] * truth[e.id];
                est_sum += exposure[e.id] * chain.rate_summary[e.id].mean;
            }
            if (occ < 20 || w_total <= 0.0) continue;
            const double rel = std::fabs(est_sum - truth_sum) / truth_sum;
            worst_rate = std::max(worst_rate, rel);
            ++rated;
            c.require(rel <= 0.20,
                      to_string(kind) + std::string(" pooled rate off by ") +
                          std::to_string(rel));
        }
        c.require(rated >= 5, "only " + std::to_string(rated) + " event types rated");

        double worst_mean = 0.0;
        for (int sp = 0; sp < C; ++sp)
            for (int st = 0; st < 2; ++st) {
                Eigen::Vector3d mu = Eigen::Vector3d::Zero();
                for (const PosteriorSample& s : chain.samples)
                    mu += s.emission.at(sp, st).mean;
                mu /= static_cast<double>(chain.samples.size());
                const Eigen::Vector3d err = mu - params.at(sp, st).mean;
                for (int d = 0; d < 3; ++d) {
                    worst_mean = std::max(worst_mean, std::fabs(err[d]));
                    c.require(std::fabs(err[d]) <= 0.1, "emission mean off by " +
                                                            std::to_string(err[d]));
                }
            }
        char buf[112];
        std::snprintf(buf, sizeof buf,
                      "%d event types within 20%% (worst %.1f%%), emission means "
                      "within %.3f sigma",
                      rated, 100.0 * worst_rate, worst_mean);
        c.note(buf);
    });

    criterion(6, "sampler matches exhaustive enumeration on a toy chain", [](Check& c) {
        const EventCatalog cat = build_catalog(2);
        const RateVector rates = toy_rates(cat);
        const EmissionParams params = separated_params(2, 2.5, 1.0);
        const double dt = 0.1;
        const int N = 10, S = 4;

        Rng sim(29);
        const SlotTrajectory traj = slotted_simulate(cat, rates, StateVector(2), N, dt, sim);
        const ObservationSeries series = generate_observations(cat, traj, params, sim);

        // Exact per-slot marginals by summing over all S^N paths, with the
        // transition and emission terms written out from first principles.
        std::vector<double> T(S * S, 0.0);
        for (int s = 0; s < S; ++s) {
            const StateVector x = StateVector::from_index(s, 2);
            double H = 0.0;
            for (const EventSpec& e : cat.events())
                if (e.guard_holds(x)) H += rates[e.id];
            T[s * S + s] += H > 0.0 ? std::exp(-H * dt) : 1.0;
            if (H <= 0.0) continue;
            for (const EventSpec& e : cat.events()) {
                if (!e.guard_holds(x) || rates[e.id] <= 0.0) continue;
                const int nxt = static_cast<int>(apply_event(x, e).index());
                T[s * S + nxt] += rates[e.id] / H * -std::expm1(-H * dt);
            }
        }
        std::vector<double> E(static_cast<std::size_t>(N) * S, 0.0);
        for (int k = 0; k < N; ++k)
            for (int s = 0; s < S; ++s) {
                double ll = 0.0;
                for (int sp = 0; sp < 2; ++sp) {
                    const StatusGaussian& gsn = params.at(sp, (s >> sp) & 1);
                    const Eigen::Vector3d r = series.frames[k][sp].dense() - gsn.mean;
                    ll += -0.5 * (3.0 * std::log(2.0 * M_PI) +
                                  std::log(gsn.cov.determinant()) +
                                  r.dot(gsn.cov.inverse() * r));
                }
                E[static_cast<std::size_t>(k) * S + s] = ll;
            }
        double emax = -1e300;
        for (double v : E) emax = std::max(emax, v);
        std::vector<std::vector<double>> marg(N, std::vector<double>(S, 0.0));
        double norm = 0.0;
        std::vector<int> digits(N, 0);
        std::size_t total_paths = 1;
        for (int i = 0; i < N; ++i) total_paths *= S;
        for (std::size_t idx = 0; idx < total_paths; ++idx) {
            std::size_t rem = idx;
            for (int i = 0; i < N; ++i) {
                digits[i] = static_cast<int>(rem % S);
                rem /= S;
            }
            double w = 1.0 / S * std::exp(E[digits[0]] - emax);
            for (int k = 1; k < N && w > 0.0; ++k)
                w *= T[digits[k - 1] * S + digits[k]] *
                     std::exp(E[static_cast<std::size_t>(k) * S + digits[k]] - emax);
            if (w <= 0.0) continue;
            for (int k = 0; k < N; ++k) marg[k][digits[k]] += w;
            norm += w;
        }
        for (auto& m : marg)
            for (double& p : m) p /= norm;

        // Pin rates and emissions with overwhelming prior weight so the
        // chain explores exactly the enumerated posterior.
        PriorConfig prior;
        prior.rate.mean_rate = rates;
        prior.rate.pseudo_slots = 1e9;
        for (int st = 0; st < 2; ++st) {
            NiwParams& np = prior.emission[st];
            np.kappa = 1e9;
            np.nu = 1e9;
            np.mu0 = params.at(0, st).mean;
            np.psi = params.at(0, st).cov * (np.nu - kEmissionDims - 1.0);
        }
        GibbsConfig cfg;
        cfg.sweeps = 12000;
        cfg.burn_in = 2000;
        cfg.dt_s = dt;
        cfg.seed = 77;
        cfg.prior = prior;
        const Chain chain = run_chain(series, cat, cfg);
        c.require(chain.samples.size() == 10000, "expected 10^4 retained samples");

        std::vector<std::vector<int>> count(N, std::vector<int>(S, 0));
        for (const PosteriorSample& s : chain.samples)
            for (int k = 0; k < N; ++k) count[k][s.states[k]] += 1;
        double worst_tv = 0.0;
        for (int k = 0; k < N; ++k) {
            double tv = 0.0;
            for (int s = 0; s < S; ++s)
                tv += std::fabs(count[k][s] / 10000.0 - marg[k][s]);
            worst_tv = std::max(worst_tv, tv / 2.0);
        }
        c.require(worst_tv <= 0.02, "worst per-slot TV " + std::to_string(worst_tv));
        char buf[80];
        std::snprintf(buf, sizeof buf, "worst per-slot TV %.4f over %d slots", worst_tv, N);
        c.note(buf);
    });

    criterion(7, "hazard coefficients recovered; survival identity exact", [](Check& c) {
        const std::vector<double> beta_true = {2.5e-4, 1e-4, 1e-5, 1e-3};
        const double baseline_true = 0.01;
        Rng rng(2026);
        std::vector<SurvivalRecord> recs;
        recs.reserve(50000);
        for (int i = 0; i < 50000; ++i) {
            SurvivalRecord r;
            double lam = baseline_true;
            for (double b : beta_true) {
                const double x = rng.uniform(0.0, 0.02 / b);
                r.covariates.push_back(x);
                lam += b * x;
            }
            r.duration_s = rng.exponential(lam);
            recs.push_back(r);
        }
        const HazardFit fit = fit_hazard(recs);
        double worst_beta = 0.0;
        for (std::size_t j = 0; j < 4; ++j) {
            const double rel = std::fabs(fit.beta[j] - beta_true[j]) / beta_true[j];
            worst_beta = std::max(worst_beta, rel);
            c.require(rel <= 0.10,
                      "beta[" + std::to_string(j) + "] off by " + std::to_string(rel));
        }
        double worst_identity = 0.0;
        Rng xg(5);
        for (int t = 0; t < 200; ++t) {
            std::vector<double> x;
            for (double b : beta_true) x.push_back(xg.uniform(0.0, 0.02 / b));
            const double tt = xg.uniform(0.0, 500.0);
            const double v = survival_function(fit, x, tt) *
                             std::exp(cumulative_hazard(fit, x, tt));
            worst_identity = std::max(worst_identity, std::fabs(v - 1.0));
        }
        c.require(worst_identity <= 1e-12,
                  "identity off by " + std::to_string(worst_identity));
        char buf[96];
        std::snprintf(buf, sizeof buf,
                      "worst beta error %.1f%%, worst |S*exp(Lambda)-1| = %.1e",
                      100.0 * worst_beta, worst_identity);
        c.note(buf);
    });

    criterion(8, "calibrated rates reproduce the target discussion profile", [](Check& c) {
        const TableTargets targets;
        const RateVector rates = calibrate_rates(targets);
        const RateProfile p = simulate_and_count(rates, 5.0, 200, 31);
        const auto rel = [](double got, double want) {
            return std::fabs(got - want) / want;
        };
        c.require(rel(p.turn_taking, targets.turn_taking) <= 0.10,
                  "turn starts " + std::to_string(p.turn_taking));
        c.require(rel(p.turn_competitions, targets.turn_competitions) <= 0.10,
                  "competitions " + std::to_string(p.turn_competitions));
        c.require(rel(p.backchannels, targets.backchannels) <= 0.10,
                  "backchannels " + std::to_string(p.backchannels));
        c.require(rel(p.switch_turns, targets.switch_turns) <= 0.10,
                  "switches " + std::to_string(p.switch_turns));
        char buf[112];
        std::snprintf(buf, sizeof buf,
                      "starts %.1f, competitions %.2f, backchannels %.1f, switches %.1f "
                      "per minute",
                      p.turn_taking, p.turn_competitions, p.backchannels, p.switch_turns);
        c.note(buf);
    });

    criterion(9, "optimal questioning halves the board; a quality matches 5-8", [](Check& c) {
        Rng rng(17);
        int worst = 0;
        for (int i = 0; i < 1000; ++i) {
            const GameLog log =
                play_game(new_game(rng.fork(2 * i).seed()), 1.0, rng.fork(2 * i + 1).seed());
            c.require(log.solved, "game not solved under optimal play");
            worst = std::max(worst, log.question_count);
            c.require(log.question_count <= 6,
                      "optimal play took " + std::to_string(log.question_count));
        }
        double matched_quality = -1.0, matched_mean = 0.0;
        for (int qi = 0; qi <= 10; ++qi) {
            const double q = qi / 10.0;
            double total = 0.0;
            Rng qrng(900 + qi);
            for (int i = 0; i < 200; ++i)
                total += play_game(new_game(qrng.fork(2 * i).seed()), q,
                                   qrng.fork(2 * i + 1).seed())
                             .question_count;
            const double mean = total / 200.0;
            if (mean >= 5.0 && mean <= 8.0 && matched_quality < 0.0) {
                matched_quality = q;
                matched_mean = mean;
            }
        }
        c.require(matched_quality >= 0.0, "no quality level averaged 5-8 questions");
        char buf[96];
        std::snprintf(buf, sizeof buf,
                      "1000/1000 optimal games <= 6 (max %d); quality %.1f averages %.2f",
                      worst, matched_quality, matched_mean);
        c.note(buf);
    });

    criterion(10, "segmentation: gap threshold, alignment, turn rules", [](Check& c) {
        // Two planted gap clusters around 0.2 s and 1.2 s.
        Rng rng(2);
        std::vector<double> gaps;
        for (int i = 0; i < 300; ++i) {
            gaps.push_back(std::exp(rng.normal(std::log(0.2), 0.25)));
            gaps.push_back(std::exp(rng.normal(std::log(1.2), 0.167)));
        }
        const GapMixture mix = fit_gap_mixture(gaps);
        c.require(mix.threshold_s > 0.5 && mix.threshold_s < 0.9,
                  "threshold " + std::to_string(mix.threshold_s));

        Rng arng(1);
        const RawBadgeSeries a = bursty_series(0, 0.0, 4000, arng);
        const AlignedSeries aligned = align_streams({a, shifted_copy(a, 1, 0.37)});
        c.require(std::fabs(aligned.offsets_s[1] + 0.37) <= 0.02,
                  "offset " + std::to_string(aligned.offsets_s[1]));

        int misclassified = 0;
        const auto expect = [&](const SegmentationResult& r,
                                const std::vector<std::pair<int, TurnKind>>& want) {
            if (r.segments.size() != want.size()) {
                ++misclassified;
                return;
            }
            for (std::size_t i = 0; i < want.size(); ++i)
                if (r.segments[i].speaker != want[i].first ||
                    r.segments[i].kind != want[i].second)
                    ++misclassified;
        };
        expect(segment_turns({{0, 1.0, 4.0}}, 0.7), {{0, TurnKind::Turn}});
        expect(segment_turns({{0, 0.0, 1.0}, {0, 1.3, 2.3}}, 0.7), {{0, TurnKind::Turn}});
        expect(segment_turns({{0, 0.0, 3.0}, {1, 1.0, 1.5}}, 0.7),
               {{0, TurnKind::Turn}, {1, TurnKind::BackchannelCandidate}});
        expect(segment_turns({{0, 5.0, 8.0}, {1, 1.0, 1.5}}, 0.7), {{0, TurnKind::Turn}});
        expect(segment_turns({{0, 0.0, 2.0}, {0, 4.0, 5.2}}, 0.7), {{0, TurnKind::Turn}});
        expect(segment_turns({{0, 0.0, 2.0}, {0, 2.3, 3.5}}, 0.7), {{0, TurnKind::Turn}});
        c.require(misclassified == 0,
                  std::to_string(misclassified) + " misclassified constructed cases");
        char buf[112];
        std::snprintf(buf, sizeof buf,
                      "threshold %.3f s, realignment error %.3f s, 0 misclassifications",
                      mix.threshold_s, std::fabs(aligned.offsets_s[1] + 0.37));
        c.note(buf);
    });

    criterion(11, "statistics: exact Wilcoxon, F-test null, nested r^2", [](Check& c) {
        Rng rng(23);
        int compared = 0;
        for (int n = 5; n <= 12; ++n)
            for (int rep = 0; rep < 8; ++rep) {
                std::vector<double> diffs;
                for (int i = 0; i < n; ++i)
                    diffs.push_back((rng.uniform_int(7) - 3) * 0.5);
                bool any = false;
                for (double d : diffs) any = any || d != 0.0;
                int nonzero = 0;
                for (double d : diffs) nonzero += d != 0.0 ? 1 : 0;
                if (!any || nonzero < 5) continue;
                for (bool one_sided : {false, true}) {
                    const WilcoxonResult r = wilcoxon_signed_rank(diffs, one_sided);
                    const double oracle = oracle_wilcoxon_p(diffs, one_sided);
                    c.require(r.exact, "expected the exact path");
                    if (r.p_value != oracle) {
                        c.require(false, "exact p " + std::to_string(r.p_value) +
                                             " != oracle " + std::to_string(oracle));
                    }
                    ++compared;
                }
            }
        c.require(compared >= 80, "too few comparable cases");

        std::vector<double> pvals;
        Rng frng(31);
        for (int sim = 0; sim < 1000; ++sim) {
            const int n = 60;
            Eigen::MatrixXd x(n, 3);
            Eigen::VectorXd y(n);
            for (int i = 0; i < n; ++i) {
                y(i) = frng.normal();
                for (int j = 0; j < 3; ++j) x(i, j) = frng.normal();
            }
            const OlsFit restricted = ols_fit(x.leftCols(1), y);
            const OlsFit full = ols_fit(x, y);
            pvals.push_back(nested_f_test(restricted, full, n).p_value);
        }
        const double ks_p = ks_uniform_pvalue(pvals);
        c.require(ks_p > 0.01, "KS p " + std::to_string(ks_p));

        Rng mrng(41);
        for (int rep = 0; rep < 50; ++rep) {
            const int n = 40;
            Eigen::MatrixXd x(n, 4);
            Eigen::VectorXd y(n);
            for (int i = 0; i < n; ++i) {
                y(i) = mrng.normal();
                for (int j = 0; j < 4; ++j) x(i, j) = mrng.normal();
            }
            double prev = -1.0;
            for (int p = 1; p <= 4; ++p) {
                const double r2 = ols_fit(x.leftCols(p), y).r_squared;
                c.require(r2 >= prev - 1e-12, "r^2 decreased when adding a column");
                prev = r2;
            }
        }
        char buf[96];
        std::snprintf(buf, sizeof buf,
                      "%d exact p-values bit-identical, F-null KS p = %.3f, r^2 monotone",
                      compared, ks_p);
        c.note(buf);
    });

    criterion(12, "CLI pipeline is byte-identical across reruns", [&cli](Check& c) {
        if (cli.empty()) {
            c.require(false, "pass the CLI binary path as argv[1]");
            return;
        }
        const fs::path root = fs::temp_directory_path() / "turnmjp_acceptance";
        fs::remove_all(root);
        fs::create_directories(root);
        const auto dir = [&](const std::string& name) {
            return (root / name).string();
        };

        // Fixtures the commands consume.
        Rng brng(64);
        const RawBadgeSeries base = bursty_series(0, 0.0, 4000, brng);
        write_badges_csv(dir("badges.csv"),
                         {base, shifted_copy(base, 1, 0.25), shifted_copy(base, 2, -0.1)});
        std::vector<QuestionIntervalRow> rows;
        Rng rrng(65);
        for (int i = 0; i < 200; ++i) {
            QuestionIntervalRow q;
            q.rates = {rrng.uniform(0.3, 0.9), rrng.uniform(0.0, 0.1),
                       rrng.uniform(0.1, 0.4), rrng.uniform(0.0, 0.1)};
            const double lam = 0.002 + 2.5e-4 * q.rates[0] * 60.0;
            q.interval_s = 120.0;
            q.fraction_before = 1.0;
            q.fraction_after = std::exp(-lam * q.interval_s * rrng.uniform(0.5, 1.5));
            rows.push_back(q);
        }
        write_survival_records_csv(dir("records.csv"), rows);

        const EventCatalog cat = build_catalog(4);
        fs::create_directories(root / "groups");
        for (int gidx = 0; gidx < 6; ++gidx) {
            const fs::path gdir = root / "groups" / ("group_" + std::to_string(gidx));
            fs::create_directories(gdir);
            Rng grng(700 + gidx);
            const Trajectory gt = gillespie_simulate(cat, default_conversation_rates(),
                                                     StateVector(4), 300.0, grng);
            write_counts_csv((gdir / "counts.csv").string(),
                             window_counts(classify_trajectory(cat, gt), 60.0, 300.0));
            nlohmann::json meta;
            meta["group_id"] = "group_" + std::to_string(gidx);
            meta["questions"] = 6 + gidx;
            write_json_file((gdir / "group.json").string(), meta);
        }

        // Each command twice; outputs must agree byte for byte.
        struct Step {
            std::string name;
            std::string args;  // %OUT% is replaced per run
        };
        const std::vector<Step> steps = {
            {"simulate", "--seed 4242 --out %OUT% simulate --minutes 10"},
            {"infer", "--seed 4242 --out %OUT% infer --observations " + dir("sim_a") +
                          "/observations.csv --sweeps 600 --burn 200 --chains 2"},
            {"extract", "--seed 4242 --out %OUT% extract --trajectory " + dir("sim_a") +
                            "/trajectory.csv"},
            {"segment", "--seed 4242 --out %OUT% segment --badges " + dir("badges.csv")},
            {"survival", "--seed 4242 --out %OUT% survival --records " + dir("records.csv")},
            {"tasksim", "--seed 4242 --out %OUT% tasksim --games 300 --quality 0.7"},
            {"table1", "--seed 4242 --out %OUT% table1 --groups " + dir("groups")},
            {"report", "--seed 4242 --out %OUT% report --groups " + dir("groups") +
                           " --records " + dir("records.csv")},
        };
        for (const Step& s : steps) {
            for (const std::string suffix : {"_a", "_b"}) {
                std::string args = s.args;
                const std::string out = dir(s.name == "simulate" ? "sim" + suffix
                                                                 : s.name + suffix);
                args.replace(args.find("%OUT%"), 5, out);
                const int rc = run_cli(cli, args);
                c.require(rc == 0, s.name + " exited " + std::to_string(rc));
                if (rc != 0) return;
            }
            std::string why;
            const std::string base_name = s.name == "simulate" ? "sim" : s.name;
            if (!dirs_identical(root / (base_name + "_a"), root / (base_name + "_b"), why))
                c.require(false, s.name + ": " + why);
        }
        c.note("8 commands, each rerun byte-identical");
    });

    std::printf("%s\n", g_failures == 0 ? "acceptance: all criteria passed"
                                        : "acceptance: FAILURES present");
    return g_failures == 0 ? 0 : 1;
}

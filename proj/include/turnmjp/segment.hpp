#pragma once
// Turn-level preprocessing of raw badge streams:
//
//  - align_streams: per-badge clock offsets by maximizing the cross
//    correlation of top-decile audio indicator trains against badge 0,
//    searched over +-5 s at 0.01 s resolution.
//  - detect_pitched: maximal runs of samples strictly above the per-badge
//    audio percentile (default 90th).
//  - fit_gap_mixture: 2-component Gaussian mixture on log inter-pitch
//    gaps, fit by EM with restarts; the turn-break threshold is the gap
//    where the long-gap component's responsibility crosses one half.
//  - segment_turns: merge pitched runs within the break threshold, then
//    classify spans: >= 1.5 s turns, < 1 s backchannel candidates when
//    they start inside another speaker's turn. Spans in [1.0, 1.5) attach
//    to an adjacent same-speaker turn when the gap is under the threshold;
//    since merging already joined such spans, in practice they are dropped
//    and counted.
//  - build_observations: project aligned streams onto a fixed dt grid as
//    emission frames (log variances, facing counts from infrared hits).

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "emission.hpp"
#include "mathutil.hpp"
#include "rng.hpp"

namespace turnmjp {

struct BadgeSample {
    double t_s = 0.0;
    double audio_var = 0.0;
    double motion_var = 0.0;
    std::vector<int> ir_ids;  // badge ids seen by the infrared sensor
};

struct RawBadgeSeries {
    int badge_id = 0;
    double sample_period_s = 0.0;
    std::vector<BadgeSample> samples;

    void validate() const {
        if (!(sample_period_s > 0.0))
            throw DataError("RawBadgeSeries: sample period must be positive");
        for (std::size_t i = 1; i < samples.size(); ++i)
            if (samples[i].t_s < samples[i - 1].t_s)
                throw DataError("RawBadgeSeries: timestamps must be nondecreasing");
        for (const BadgeSample& s : samples)
            if (s.audio_var < 0.0 || s.motion_var < 0.0)
                throw DataError("RawBadgeSeries: variances must be nonnegative");
    }
};

struct PitchSegment {
    int badge_id = 0;
    double start_s = 0.0;
    double end_s = 0.0;
};

enum class TurnKind { Turn, BackchannelCandidate };

inline const char* to_string(TurnKind k) {
    return k == TurnKind::Turn ? "turn" : "backchannel-candidate";
}

struct TurnSegment {
    SpeakerId speaker = 0;
    double start_s = 0.0;
    double end_s = 0.0;
    TurnKind kind = TurnKind::Turn;

    double length_s() const { return end_s - start_s; }
};

struct AlignedSeries {
    double grid_dt_s = 0.01;
    std::vector<double> offsets_s;          // applied to each badge's clock
    std::vector<double> peak_correlation;   // against badge 0
    std::vector<bool> low_confidence;       // peak below 0.2
    std::vector<RawBadgeSeries> badges;     // timestamps already corrected
    double start_s = 0.0;                   // common overlap window
    double end_s = 0.0;
};

namespace detail {

// Zero-order-hold indicator of "audio above threshold" on a fixed grid.
inline std::vector<std::int8_t> indicator_train(const RawBadgeSeries& b, double thresh,
                                                double t0, int n, double dt) {
    std::vector<std::int8_t> out(n, 0);
    std::size_t j = 0;
    for (int k = 0; k < n; ++k) {
        const double t = t0 + k * dt;
        while (j + 1 < b.samples.size() && b.samples[j + 1].t_s <= t) ++j;
        if (b.samples.empty() || b.samples[j].t_s > t) continue;  // before first sample
        out[k] = b.samples[j].audio_var > thresh ? 1 : 0;
    }
    return out;
}

inline double pearson_binary(const std::vector<std::int8_t>& a, const std::vector<std::int8_t>& b,
                             int shift) {
    // Correlate a[k] with b[k + shift] over the valid overlap.
    const int n = static_cast<int>(a.size());
    int lo = std::max(0, -shift);
    int hi = std::min(n, n - shift);
    if (hi - lo < 10) return 0.0;
    double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
    const double m = hi - lo;
    for (int k = lo; k < hi; ++k) {
        const double x = a[k];
        const double y = b[k + shift];
        sa += x;
        sb += y;
        sab += x * y;
        saa += x * x;
        sbb += y * y;
    }
    const double cov = sab / m - (sa / m) * (sb / m);
    const double va = saa / m - (sa / m) * (sa / m);
    const double vb = sbb / m - (sb / m) * (sb / m);
    if (va <= 0.0 || vb <= 0.0) return 0.0;
    return cov / std::sqrt(va * vb);
}

} // namespace detail

// Choose per-badge clock offsets against badge 0. A badge whose events
// appear later than badge 0's receives a negative offset that, added to
// its timestamps, brings it onto badge 0's clock.
inline AlignedSeries align_streams(const std::vector<RawBadgeSeries>& raw,
                                   double max_lag_s = 5.0, double grid_dt_s = 0.01) {
    if (raw.size() < 2)
        throw DataError("align_streams: need at least two badges");
    for (const RawBadgeSeries& b : raw) {
        b.validate();
        if (b.samples.size() < 10)
            throw DataError("align_streams: badge stream too short");
    }

    // Per-badge top-decile thresholds; flat audio cannot be aligned.
    std::vector<double> thresh(raw.size());
    for (std::size_t b = 0; b < raw.size(); ++b) {
        std::vector<double> audio;
        audio.reserve(raw[b].samples.size());
        for (const BadgeSample& s : raw[b].samples) audio.push_back(s.audio_var);
        thresh[b] = percentile_interp(audio, 90.0);
        bool any = false;
        for (double v : audio)
            if (v > thresh[b]) any = true;
        if (!any)
            throw DataError("align_streams: degenerate audio signal on badge " +
                            std::to_string(raw[b].badge_id));
    }

    const double t0 = raw[0].samples.front().t_s;
    const double t1 = raw[0].samples.back().t_s;
    if (!(t1 > t0))
        throw DataError("align_streams: reference badge spans no time");
    const int n = static_cast<int>((t1 - t0) / grid_dt_s) + 1;
    const std::vector<std::int8_t> ref =
        detail::indicator_train(raw[0], thresh[0], t0, n, grid_dt_s);

    AlignedSeries out;
    out.grid_dt_s = grid_dt_s;
    out.offsets_s.assign(raw.size(), 0.0);
    out.peak_correlation.assign(raw.size(), 1.0);
    out.low_confidence.assign(raw.size(), false);
    out.badges = raw;

    const int max_shift = static_cast<int>(std::lround(max_lag_s / grid_dt_s));
    for (std::size_t b = 1; b < raw.size(); ++b) {
        // Check gross overlap before searching.
        const double b0 = raw[b].samples.front().t_s;
        const double b1 = raw[b].samples.back().t_s;
        if (b0 - max_lag_s > t1 || b1 + max_lag_s < t0)
            throw DataError("align_streams: badge " + std::to_string(raw[b].badge_id) +
                            " does not overlap the reference");
        const std::vector<std::int8_t> train =
            detail::indicator_train(raw[b], thresh[b], t0, n, grid_dt_s);
        double best = -2.0;
        int best_shift = 0;
        for (int shift = -max_shift; shift <= max_shift; ++shift) {
            const double c = detail::pearson_binary(ref, train, shift);
            if (c > best) {
                best = c;
                best_shift = shift;
            }
        }
        // ref[k] matches train[k + shift]: badge b's clock runs shift*dt
        // ahead, so correct it by -shift*dt.
        out.offsets_s[b] = -best_shift * grid_dt_s;
        out.peak_correlation[b] = best;
        out.low_confidence[b] = best < 0.2;
        for (BadgeSample& s : out.badges[b].samples) s.t_s += out.offsets_s[b];
    }

    out.start_s = -std::numeric_limits<double>::infinity();
    out.end_s = std::numeric_limits<double>::infinity();
    for (const RawBadgeSeries& b : out.badges) {
        out.start_s = std::max(out.start_s, b.samples.front().t_s);
        out.end_s = std::min(out.end_s, b.samples.back().t_s + b.sample_period_s);
    }
    if (!(out.end_s > out.start_s))
        throw DataError("align_streams: no common overlap after alignment");
    return out;
}

// Maximal runs strictly above the per-badge percentile threshold. A run's
// end is the time of the next sample (or the last time plus the median
// sample spacing when the run touches the end of the stream).
inline std::vector<PitchSegment> detect_pitched(const RawBadgeSeries& series,
                                                double percentile = 90.0) {
    series.validate();
    if (series.samples.size() < 10)
        throw DataError("detect_pitched: need at least 10 samples");
    std::vector<double> audio;
    audio.reserve(series.samples.size());
    for (const BadgeSample& s : series.samples) audio.push_back(s.audio_var);
    const double thresh = percentile_interp(audio, percentile);

    std::vector<double> spacing;
    for (std::size_t i = 1; i < series.samples.size(); ++i)
        spacing.push_back(series.samples[i].t_s - series.samples[i - 1].t_s);
    const double tail = spacing.empty() ? series.sample_period_s
                                        : percentile_interp(spacing, 50.0);

    std::vector<PitchSegment> out;
    std::size_t i = 0;
    const std::size_t n = series.samples.size();
    while (i < n) {
        if (!(series.samples[i].audio_var > thresh)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && series.samples[j + 1].audio_var > thresh) ++j;
        PitchSegment seg;
        seg.badge_id = series.badge_id;
        seg.start_s = series.samples[i].t_s;
        seg.end_s = j + 1 < n ? series.samples[j + 1].t_s : series.samples[j].t_s + tail;
        out.push_back(seg);
        i = j + 1;
    }
    return out;
}

struct GapMixture {
    double mean_log[2] = {0.0, 0.0};   // component 0 = short gaps
    double var_log[2] = {1.0, 1.0};
    double weight[2] = {0.5, 0.5};
    double threshold_s = std::numeric_limits<double>::infinity();
    bool single_component = false;
    std::vector<double> ll_trace;      // of the winning restart
};

namespace detail {

inline double log_normal_pdf(double y, double m, double v) {
    return -0.5 * (std::log(2.0 * M_PI * v) + (y - m) * (y - m) / v);
}

struct EmFit {
    double m[2], v[2], w[2];
    double ll = -std::numeric_limits<double>::infinity();
    std::vector<double> trace;
};

inline EmFit run_em(const std::vector<double>& y, double m0, double m1) {
    const double var_floor = 1e-8;
    const std::size_t n = y.size();
    EmFit fit;

    // Hard k-means refinement of the two seeds.
    double c[2] = {m0, m1};
    std::vector<int> assign(n, 0);
    for (int iter = 0; iter < 100; ++iter) {
        bool moved = false;
        double sum[2] = {0, 0};
        int cnt[2] = {0, 0};
        for (std::size_t i = 0; i < n; ++i) {
            const int k = std::fabs(y[i] - c[0]) <= std::fabs(y[i] - c[1]) ? 0 : 1;
            if (assign[i] != k) moved = true;
            assign[i] = k;
            sum[k] += y[i];
            cnt[k] += 1;
        }
        for (int k = 0; k < 2; ++k)
            if (cnt[k] > 0) c[k] = sum[k] / cnt[k];
        if (!moved) break;
    }
    double vtot = 0.0, mtot = 0.0;
    for (double yi : y) mtot += yi;
    mtot /= n;
    for (double yi : y) vtot += (yi - mtot) * (yi - mtot);
    vtot = std::max(vtot / n, var_floor);
    for (int k = 0; k < 2; ++k) {
        double s = 0.0, ss = 0.0;
        int cnt = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (assign[i] == k) {
                s += y[i];
                ++cnt;
            }
        fit.m[k] = cnt > 0 ? s / cnt : c[k];
        for (std::size_t i = 0; i < n; ++i)
            if (assign[i] == k) ss += (y[i] - fit.m[k]) * (y[i] - fit.m[k]);
        fit.v[k] = cnt > 1 ? std::max(ss / cnt, var_floor) : vtot;
        fit.w[k] = std::max(cnt / static_cast<double>(n), 1e-3);
    }
    const double wsum = fit.w[0] + fit.w[1];
    fit.w[0] /= wsum;
    fit.w[1] /= wsum;

    std::vector<double> r(n);  // responsibility of component 1
    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 500; ++iter) {
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double l0 = std::log(fit.w[0]) + log_normal_pdf(y[i], fit.m[0], fit.v[0]);
            const double l1 = std::log(fit.w[1]) + log_normal_pdf(y[i], fit.m[1], fit.v[1]);
            const double mx = std::max(l0, l1);
            const double z = std::exp(l0 - mx) + std::exp(l1 - mx);
            ll += mx + std::log(z);
            r[i] = std::exp(l1 - mx) / z;
        }
        fit.trace.push_back(ll);
        fit.ll = ll;
        if (iter > 0 && std::fabs(ll - prev_ll) <= 1e-8 * std::fabs(prev_ll)) break;
        prev_ll = ll;

        double n1 = 0.0;
        for (double ri : r) n1 += ri;
        const double n0 = n - n1;
        if (n0 < 1e-9 || n1 < 1e-9) break;  // one component vanished
        double s0 = 0, s1 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            s0 += (1.0 - r[i]) * y[i];
            s1 += r[i] * y[i];
        }
        fit.m[0] = s0 / n0;
        fit.m[1] = s1 / n1;
        double q0 = 0, q1 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            q0 += (1.0 - r[i]) * (y[i] - fit.m[0]) * (y[i] - fit.m[0]);
            q1 += r[i] * (y[i] - fit.m[1]) * (y[i] - fit.m[1]);
        }
        fit.v[0] = std::max(q0 / n0, var_floor);
        fit.v[1] = std::max(q1 / n1, var_floor);
        fit.w[0] = n0 / n;
        fit.w[1] = n1 / n;
    }
    return fit;
}

} // namespace detail

// EM over log-gaps, 10 restarts from randomized k-means seeds, best
// likelihood kept. The reported threshold is on the natural (seconds)
// scale; symmetric fits land exactly at the midpoint.
inline GapMixture fit_gap_mixture(const std::vector<double>& gaps_s) {
    if (gaps_s.size() < 10)
        throw DataError("fit_gap_mixture: need at least 10 gaps");
    std::vector<double> y;
    y.reserve(gaps_s.size());
    for (double g : gaps_s) {
        if (!(g > 0.0))
            throw DataError("fit_gap_mixture: gaps must be positive");
        y.push_back(std::log(g));
    }

    detail::EmFit best;
    for (int restart = 0; restart < 10; ++restart) {
        Rng rng(0x9e3779b97f4a7c15ull + restart);
        const double a = y[rng.uniform_int(static_cast<int>(y.size()))];
        double b = a;
        for (int tries = 0; tries < 50 && b == a; ++tries)
            b = y[rng.uniform_int(static_cast<int>(y.size()))];
        const detail::EmFit fit = detail::run_em(y, std::min(a, b), std::max(a, b));
        if (fit.ll > best.ll) best = fit;
    }

    GapMixture out;
    const int lo = best.m[0] <= best.m[1] ? 0 : 1;
    for (int k = 0; k < 2; ++k) {
        out.mean_log[k] = best.m[k == 0 ? lo : 1 - lo];
        out.var_log[k] = best.v[k == 0 ? lo : 1 - lo];
        out.weight[k] = best.w[k == 0 ? lo : 1 - lo];
    }
    out.ll_trace = best.trace;

    const double sep = out.mean_log[1] - out.mean_log[0];
    if (sep < 1e-6 || out.weight[0] < 1e-3 || out.weight[1] < 1e-3) {
        out.single_component = true;
        out.threshold_s = std::numeric_limits<double>::infinity();
        return out;
    }

    // Responsibility-0.5 crossing: w1 N(y|m1,v1) = w0 N(y|m0,v0) is a
    // quadratic in y; take the root between the means, else the midpoint.
    const double a2 = 0.5 / out.var_log[0] - 0.5 / out.var_log[1];
    const double b1 = out.mean_log[1] / out.var_log[1] - out.mean_log[0] / out.var_log[0];
    const double c0 = 0.5 * out.mean_log[0] * out.mean_log[0] / out.var_log[0] -
                      0.5 * out.mean_log[1] * out.mean_log[1] / out.var_log[1] +
                      std::log(out.weight[1] / out.weight[0]) +
                      0.5 * std::log(out.var_log[0] / out.var_log[1]);
    double y_star = 0.5 * (out.mean_log[0] + out.mean_log[1]);
    if (std::fabs(a2) < 1e-12) {
        if (std::fabs(b1) > 1e-12) y_star = -c0 / b1;
    } else {
        const double disc = b1 * b1 - 4.0 * a2 * c0;
        if (disc >= 0.0) {
            const double r1 = (-b1 + std::sqrt(disc)) / (2.0 * a2);
            const double r2 = (-b1 - std::sqrt(disc)) / (2.0 * a2);
            const bool r1_in = r1 > out.mean_log[0] && r1 < out.mean_log[1];
            const bool r2_in = r2 > out.mean_log[0] && r2 < out.mean_log[1];
            if (r1_in) y_star = r1;
            else if (r2_in) y_star = r2;
        }
    }
    out.threshold_s = std::exp(y_star);
    return out;
}

struct SegmentationResult {
    std::vector<TurnSegment> segments;
    int dropped_mid = 0;    // [1.0, 1.5) spans with no attachable neighbor
    int dropped_short = 0;  // < 1.0 s spans outside any other speaker's turn
};

// Merge-then-classify. Spans after merging are separated by at least the
// break threshold, so the attach branch for mid-length spans cannot fire;
// it is kept to match the documented rule and the drops are counted.
inline SegmentationResult segment_turns(std::vector<PitchSegment> pitched, double threshold_s,
                                        double min_turn_s = 1.5, double backchannel_max_s = 1.0) {
    if (!(threshold_s > 0.0))
        throw ConfigError("segment_turns: break threshold must be positive");
    if (!(backchannel_max_s <= min_turn_s))
        throw ConfigError("segment_turns: backchannel bound must not exceed the turn minimum");
    for (const PitchSegment& p : pitched)
        if (!(p.end_s > p.start_s))
            throw DataError("segment_turns: pitched segment with nonpositive length");

    std::sort(pitched.begin(), pitched.end(), [](const PitchSegment& a, const PitchSegment& b) {
        if (a.badge_id != b.badge_id) return a.badge_id < b.badge_id;
        return a.start_s < b.start_s;
    });

    // Same-speaker merge under the gap threshold.
    std::vector<PitchSegment> spans;
    for (const PitchSegment& p : pitched) {
        if (!spans.empty() && spans.back().badge_id == p.badge_id &&
            p.start_s - spans.back().end_s < threshold_s) {
            spans.back().end_s = std::max(spans.back().end_s, p.end_s);
        } else {
            spans.push_back(p);
        }
    }

    SegmentationResult out;
    std::vector<TurnSegment> turns;
    for (const PitchSegment& s : spans) {
        if (s.end_s - s.start_s >= min_turn_s)
            turns.push_back({s.badge_id, s.start_s, s.end_s, TurnKind::Turn});
    }

    for (const PitchSegment& s : spans) {
        const double len = s.end_s - s.start_s;
        if (len >= min_turn_s) continue;
        if (len < backchannel_max_s) {
            bool inside_other = false;
            for (const TurnSegment& t : turns)
                if (t.speaker != s.badge_id && s.start_s >= t.start_s && s.start_s < t.end_s)
                    inside_other = true;
            if (inside_other)
                turns.push_back({s.badge_id, s.start_s, s.end_s, TurnKind::BackchannelCandidate});
            else
                out.dropped_short += 1;
            continue;
        }
        // Mid-length span: attach to the nearest adjacent same-speaker turn
        // when the gap is under the threshold.
        double best_gap = std::numeric_limits<double>::infinity();
        TurnSegment* best = nullptr;
        for (TurnSegment& t : turns) {
            if (t.speaker != s.badge_id || t.kind != TurnKind::Turn) continue;
            const double gap = t.start_s >= s.end_s ? t.start_s - s.end_s
                                                    : (s.start_s >= t.end_s
                                                           ? s.start_s - t.end_s
                                                           : std::numeric_limits<double>::infinity());
            if (gap < best_gap) {
                best_gap = gap;
                best = &t;
            }
        }
        if (best && best_gap < threshold_s) {
            best->start_s = std::min(best->start_s, s.start_s);
            best->end_s = std::max(best->end_s, s.end_s);
        } else {
            out.dropped_mid += 1;
        }
    }

    std::sort(turns.begin(), turns.end(), [](const TurnSegment& a, const TurnSegment& b) {
        if (a.start_s != b.start_s) return a.start_s < b.start_s;
        return a.speaker < b.speaker;
    });
    out.segments = std::move(turns);
    return out;
}

// Project aligned badge streams onto a dt grid as emission frames. Audio
// and motion variances are averaged within each slot and log-transformed;
// a slot with no samples leaves the channel missing. The facing channel
// counts how many OTHER badges report this badge in their infrared hits.
inline ObservationSeries build_observations(const AlignedSeries& aligned, double dt_s) {
    if (!(dt_s > 0.0))
        throw ConfigError("build_observations: dt must be positive");
    const int B = static_cast<int>(aligned.badges.size());
    const int n = static_cast<int>((aligned.end_s - aligned.start_s) / dt_s);
    if (n < 1)
        throw DataError("build_observations: overlap shorter than one slot");

    ObservationSeries series;
    series.dt_s = dt_s;
    series.speaker_count = B;
    series.frames.assign(n, ObservationFrame(B));

    std::vector<std::vector<int>> facing(n, std::vector<int>(B, 0));
    for (int b = 0; b < B; ++b) {
        for (const BadgeSample& s : aligned.badges[b].samples) {
            const int k = static_cast<int>(std::floor((s.t_s - aligned.start_s) / dt_s));
            if (k < 0 || k >= n) continue;
            for (int seen : s.ir_ids) {
                for (int c = 0; c < B; ++c)
                    if (aligned.badges[c].badge_id == seen && c != b) facing[k][c] += 1;
            }
        }
    }
    for (int b = 0; b < B; ++b) {
        std::vector<double> audio_sum(n, 0.0), motion_sum(n, 0.0);
        std::vector<int> count(n, 0);
        for (const BadgeSample& s : aligned.badges[b].samples) {
            const int k = static_cast<int>(std::floor((s.t_s - aligned.start_s) / dt_s));
            if (k < 0 || k >= n) continue;
            audio_sum[k] += s.audio_var;
            motion_sum[k] += s.motion_var;
            count[k] += 1;
        }
        for (int k = 0; k < n; ++k) {
            SpeakerFrame& f = series.frames[k][b];
            if (count[k] > 0) {
                f.audio = std::log(1e-8 + audio_sum[k] / count[k]);
                f.motion = std::log(1e-8 + motion_sum[k] / count[k]);
            }
            f.facing = static_cast<double>(facing[k][b]);
        }
    }
    return series;
}

} // namespace turnmjp

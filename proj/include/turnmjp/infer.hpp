#pragma once
// Gibbs sampler over the slotted conversation model. One sweep:
//
//  1. sample_state_path: exact forward-filter backward-sample over the 2^C
//     joint state chain (16 states for 4 speakers) with the per-slot kernel
//     given by slot_event_distribution pushed through apply_event, then
//     label each sampled transition with its catalog event. A non-self
//     transition has a unique label (catalog invariant); a self transition
//     is labeled no-event, diagonal continue, or backchannel in proportion
//     to their probability mass.
//  2. sample_rates: per event, the slots where its guard was active form
//     fire/no-fire outcomes; the outcome probability gets a conjugate
//     Beta draw (prior pseudo-counts plus observed counts) and maps back
//     to a rate via h = -ln(1 - p)/dt.
//  3. emission update: complete frames grouped by status feed the
//     conjugate Normal-Inverse-Wishart update per (speaker, status);
//     frames with missing channels inform the path but not this update.
//
// The slot-0 state carries a uniform prior over the 2^C states and its
// event label stays empty (there is no sampled predecessor to label from).

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "emission.hpp"
#include "simulate.hpp"

namespace turnmjp {

struct GibbsConfig {
    int sweeps = 2000;
    int burn_in = 500;
    int thinning = 1;
    double dt_s = 0.1;
    std::uint64_t seed = 1;
    std::optional<PriorConfig> prior;  // defaults derived from the data

    void validate() const {
        if (burn_in < 0 || sweeps <= burn_in)
            throw ConfigError("GibbsConfig: need sweeps > burn_in >= 0");
        if (thinning < 1)
            throw ConfigError("GibbsConfig: thinning must be >= 1");
        if (!(dt_s > 0.0))
            throw ConfigError("GibbsConfig: dt must be positive");
    }
};

struct PosteriorSample {
    std::vector<std::uint32_t> states;  // joint state index during each slot
    std::vector<int> events;            // events[k] moves states[k-1] -> states[k]; [0] unused
    RateVector rates;
    EmissionParams emission;
};

struct RateSummary {
    double mean = 0.0;
    double sd = 0.0;
    double psrf = 1.0;  // split-half potential scale reduction
};

struct Chain {
    std::vector<PosteriorSample> samples;
    std::vector<RateSummary> rate_summary;  // per event id
    std::vector<double> sweep_loglik;       // forward marginal loglik per sweep
};

// Enumerated joint state space with per-state adjacency, built once.
struct StateSpace {
    int speaker_count = 0;
    int state_count = 0;
    std::vector<std::vector<int>> active;    // state -> active event ids
    std::vector<std::vector<std::pair<int, std::uint32_t>>> changing;  // (event, successor)
    std::vector<std::vector<int>> silent;    // active events with zero delta
    std::vector<int> label;                  // label[s * S + s'] = event id or -1
};

inline StateSpace build_state_space(const EventCatalog& catalog) {
    const int C = catalog.speaker_count();
    if (C > 10)
        throw ConfigError("state space too large: 2^C exceeds 1024 states");
    StateSpace sp;
    sp.speaker_count = C;
    sp.state_count = 1 << C;
    const int S = sp.state_count;
    sp.active.resize(S);
    sp.changing.resize(S);
    sp.silent.resize(S);
    sp.label.assign(static_cast<std::size_t>(S) * S, -1);
    for (int s = 0; s < S; ++s) {
        const StateVector x = StateVector::from_index(s, C);
        for (const EventSpec& e : catalog.events()) {
            if (!e.guard_holds(x)) continue;
            sp.active[s].push_back(e.id);
            if (e.changes_state()) {
                const std::uint32_t nxt = apply_event(x, e).index();
                sp.changing[s].emplace_back(e.id, nxt);
                sp.label[static_cast<std::size_t>(s) * S + nxt] = e.id;
            } else {
                sp.silent[s].push_back(e.id);
            }
        }
    }
    return sp;
}

namespace detail {

// Per-sweep transition kernel: dense row-stochastic matrix plus the
// pieces needed to label self transitions.
struct SlotKernel {
    int S = 0;
    std::vector<double> T;                     // S x S, row major
    std::vector<double> p_none;                // per state
    std::vector<std::vector<double>> p_silent; // aligned with StateSpace::silent
    std::vector<std::vector<double>> p_change; // aligned with StateSpace::changing
};

inline SlotKernel build_kernel(const StateSpace& sp, const RateVector& rates, double dt) {
    SlotKernel k;
    k.S = sp.state_count;
    k.T.assign(static_cast<std::size_t>(k.S) * k.S, 0.0);
    k.p_none.assign(k.S, 1.0);
    k.p_silent.resize(k.S);
    k.p_change.resize(k.S);
    for (int s = 0; s < k.S; ++s) {
        double H = 0.0;
        for (int id : sp.active[s]) H += rates[id];
        double self = 1.0;
        if (H > 0.0) {
            const double p_any = -std::expm1(-H * dt);
            k.p_none[s] = std::exp(-H * dt);
            self = k.p_none[s];
            for (int id : sp.silent[s]) {
                const double p = rates[id] / H * p_any;
                k.p_silent[s].push_back(p);
                self += p;
            }
            for (const auto& [id, nxt] : sp.changing[s]) {
                const double p = rates[id] / H * p_any;
                k.p_change[s].push_back(p);
                k.T[static_cast<std::size_t>(s) * k.S + nxt] += p;
            }
        } else {
            k.p_silent[s].assign(sp.silent[s].size(), 0.0);
            k.p_change[s].assign(sp.changing[s].size(), 0.0);
        }
        k.T[static_cast<std::size_t>(s) * k.S + s] += self;
    }
    return k;
}

// Fast Gaussian evaluator for complete frames; partial frames fall back to
// the generic marginalizing likelihood.
struct GaussEval {
    StatusGaussian g;
    Eigen::Matrix3d inv = Eigen::Matrix3d::Identity();
    double logdet = 0.0;
};

inline GaussEval make_eval(const StatusGaussian& g) {
    GaussEval ev;
    ev.g = g;
    Eigen::LLT<Eigen::Matrix3d> llt(g.cov);
    if (llt.info() != Eigen::Success)
        throw NumericError("gibbs: emission covariance not positive definite");
    ev.inv = llt.solve(Eigen::Matrix3d::Identity());
    ev.logdet = 0.0;
    for (int i = 0; i < 3; ++i) ev.logdet += 2.0 * std::log(llt.matrixL()(i, i));
    return ev;
}

inline double eval_loglik(const GaussEval& ev, const SpeakerFrame& f) {
    if (f.complete()) {
        const Eigen::Vector3d r = f.dense() - ev.g.mean;
        return -0.5 * (3.0 * std::log(2.0 * M_PI) + ev.logdet + r.dot(ev.inv * r));
    }
    return frame_loglik(ev.g, f);
}

} // namespace detail

// Joint draw of the latent path given rates and emission parameters.
// Returns the state index per slot, the event labels, and the forward
// marginal log likelihood of the observations under these parameters.
struct PathDraw {
    std::vector<std::uint32_t> states;
    std::vector<int> events;
    double loglik = 0.0;
};

inline PathDraw sample_state_path(const ObservationSeries& series, const EventCatalog& catalog,
                                  const StateSpace& sp, const RateVector& rates,
                                  const EmissionParams& emission, double dt, Rng& rng) {
    series.validate();
    if (series.speaker_count != catalog.speaker_count())
        throw DataError("sample_state_path: series/catalog speaker count mismatch");
    if (std::fabs(series.dt_s - dt) > 1e-9 * std::max(1.0, dt))
        throw ConfigError("sample_state_path: series dt does not match configured dt");
    check_rates(catalog, rates);
    const int N = series.slot_count();
    if (N == 0)
        throw DataError("sample_state_path: empty observation series");
    const int C = sp.speaker_count;
    const int S = sp.state_count;

    const detail::SlotKernel kernel = detail::build_kernel(sp, rates, dt);

    // Per-slot, per-speaker, per-status emission log likelihoods.
    std::vector<detail::GaussEval> evals;
    evals.reserve(2 * C);
    for (int c = 0; c < C; ++c)
        for (int st = 0; st < 2; ++st) evals.push_back(detail::make_eval(emission.at(c, st)));
    std::vector<double> L(static_cast<std::size_t>(N) * C * 2);
    for (int k = 0; k < N; ++k)
        for (int c = 0; c < C; ++c)
            for (int st = 0; st < 2; ++st)
                L[(static_cast<std::size_t>(k) * C + c) * 2 + st] =
                    detail::eval_loglik(evals[2 * c + st], series.frames[k][c]);

    // Scaled forward pass.
    std::vector<double> alpha(static_cast<std::size_t>(N) * S);
    std::vector<double> e(S), tmp(S);
    double loglik = 0.0;
    for (int k = 0; k < N; ++k) {
        double emax = -std::numeric_limits<double>::infinity();
        for (int s = 0; s < S; ++s) {
            double acc = 0.0;
            for (int c = 0; c < C; ++c)
                acc += L[(static_cast<std::size_t>(k) * C + c) * 2 + ((s >> c) & 1)];
            e[s] = acc;
            emax = std::max(emax, acc);
        }
        if (k == 0) {
            for (int s = 0; s < S; ++s) tmp[s] = 1.0 / S;
        } else {
            const double* prev = &alpha[static_cast<std::size_t>(k - 1) * S];
            for (int s2 = 0; s2 < S; ++s2) tmp[s2] = 0.0;
            for (int s = 0; s < S; ++s) {
                const double a = prev[s];
                if (a == 0.0) continue;
                const double* row = &kernel.T[static_cast<std::size_t>(s) * S];
                for (int s2 = 0; s2 < S; ++s2) tmp[s2] += a * row[s2];
            }
        }
        double norm = 0.0;
        double* cur = &alpha[static_cast<std::size_t>(k) * S];
        for (int s = 0; s < S; ++s) {
            cur[s] = tmp[s] * std::exp(e[s] - emax);
            norm += cur[s];
        }
        if (!(norm > 0.0) || !std::isfinite(norm))
            throw NumericError("sample_state_path: forward pass underflowed");
        for (int s = 0; s < S; ++s) cur[s] /= norm;
        loglik += std::log(norm) + emax;
    }

    // Backward sampling.
    PathDraw draw;
    draw.loglik = loglik;
    draw.states.resize(N);
    draw.events.assign(N, kNoEvent);
    std::vector<double> w(S);
    {
        const double* last = &alpha[static_cast<std::size_t>(N - 1) * S];
        for (int s = 0; s < S; ++s) w[s] = last[s];
        draw.states[N - 1] = static_cast<std::uint32_t>(rng.categorical(w));
    }
    for (int k = N - 2; k >= 0; --k) {
        const double* cur = &alpha[static_cast<std::size_t>(k) * S];
        const std::uint32_t nxt = draw.states[k + 1];
        for (int s = 0; s < S; ++s)
            w[s] = cur[s] * kernel.T[static_cast<std::size_t>(s) * S + nxt];
        draw.states[k] = static_cast<std::uint32_t>(rng.categorical(w));
    }

    // Transition labeling.
    std::vector<double> wl;
    std::vector<int> idl;
    for (int k = 1; k < N; ++k) {
        const int s = static_cast<int>(draw.states[k - 1]);
        const int s2 = static_cast<int>(draw.states[k]);
        if (s != s2) {
            const int id = sp.label[static_cast<std::size_t>(s) * S + s2];
            if (id < 0)
                throw NumericError("sample_state_path: sampled an unlabelable transition");
            draw.events[k] = id;
        } else {
            wl.clear();
            idl.clear();
            wl.push_back(kernel.p_none[s]);
            idl.push_back(kNoEvent);
            for (std::size_t j = 0; j < sp.silent[s].size(); ++j) {
                wl.push_back(kernel.p_silent[s][j]);
                idl.push_back(sp.silent[s][j]);
            }
            double tot = 0.0;
            for (double v : wl) tot += v;
            draw.events[k] = tot > 0.0 ? idl[rng.categorical(wl)] : kNoEvent;
        }
    }
    return draw;
}

// Conjugate rate draw. For each event, slots whose predecessor state
// activates the guard count as trials; labeled occurrences count as
// successes. The Beta posterior over the per-slot firing probability maps
// to a rate by inverting the no-event probability.
inline RateVector sample_rates(const std::vector<std::uint32_t>& states,
                               const std::vector<int>& events, const StateSpace& sp,
                               const RatePrior& prior, double dt, Rng& rng) {
    if (states.size() != events.size())
        throw DataError("sample_rates: states/events length mismatch");
    if (!(dt > 0.0))
        throw ConfigError("sample_rates: dt must be positive");
    const int V = static_cast<int>(prior.mean_rate.size());
    std::vector<long> trials(V, 0), fires(V, 0);
    for (std::size_t k = 1; k < states.size(); ++k) {
        for (int id : sp.active[states[k - 1]]) trials[id] += 1;
        if (events[k] != kNoEvent) fires[events[k]] += 1;
    }
    RateVector rates(V);
    for (int i = 0; i < V; ++i) {
        const double p_prior = -std::expm1(-prior.mean_rate[i] * dt);
        const double a = prior.pseudo_slots * p_prior + fires[i];
        const double b = prior.pseudo_slots * (1.0 - p_prior) + (trials[i] - fires[i]);
        const double p = rng.beta(a, b);
        rates[i] = -std::log1p(-p) / dt;
    }
    return rates;
}

// Conjugate emission draw from complete frames grouped by sampled status.
inline EmissionParams sample_emissions(const ObservationSeries& series,
                                       const std::vector<std::uint32_t>& states,
                                       const std::array<NiwParams, 2>& prior, Rng& rng) {
    const int C = series.speaker_count;
    if (states.size() != series.frames.size())
        throw DataError("sample_emissions: states/series length mismatch");
    EmissionParams params;
    params.by_speaker.resize(C);
    std::vector<Eigen::Vector3d> bucket;
    for (int c = 0; c < C; ++c) {
        for (int st = 0; st < 2; ++st) {
            bucket.clear();
            for (std::size_t k = 0; k < states.size(); ++k) {
                if ((((states[k] >> c) & 1u) != 0) != (st == 1)) continue;
                const SpeakerFrame& f = series.frames[k][c];
                if (f.complete()) bucket.push_back(f.dense());
            }
            params.at(c, st) = niw_sample(niw_update(prior[st], bucket), rng);
        }
    }
    return params;
}

inline bool path_consistent(const PosteriorSample& sample, const EventCatalog& catalog) {
    if (sample.states.empty()) return sample.events.empty();
    if (sample.states.size() != sample.events.size()) return false;
    StateVector x = StateVector::from_index(sample.states[0], catalog.speaker_count());
    for (std::size_t k = 1; k < sample.states.size(); ++k) {
        const int id = sample.events[k];
        if (id != kNoEvent) {
            const EventSpec& e = catalog.event(id);
            if (!e.guard_holds(x)) return false;
            x = apply_event(x, e);
        }
        if (x.index() != sample.states[k]) return false;
    }
    return true;
}

inline PosteriorSample initial_sample(const EventCatalog& catalog, const PriorConfig& prior) {
    PosteriorSample s;
    s.rates = prior.rate.mean_rate;
    s.emission.by_speaker.resize(catalog.speaker_count());
    for (int c = 0; c < catalog.speaker_count(); ++c)
        for (int st = 0; st < 2; ++st) {
            StatusGaussian g;
            g.mean = prior.emission[st].mu0;
            const double denom = prior.emission[st].nu - kEmissionDims - 1.0;
            g.cov = prior.emission[st].psi / std::max(denom, 1.0);
            s.emission.at(c, st) = g;
        }
    return s;
}

// One full Gibbs scan; consumes only the parameters of `cur` (the path is
// resampled first).
inline PosteriorSample gibbs_sweep(const PosteriorSample& cur, const ObservationSeries& series,
                                   const EventCatalog& catalog, const StateSpace& sp,
                                   const PriorConfig& prior, double dt, Rng& rng,
                                   double* out_loglik = nullptr) {
    PathDraw draw =
        sample_state_path(series, catalog, sp, cur.rates, cur.emission, dt, rng);
    PosteriorSample nxt;
    nxt.states = std::move(draw.states);
    nxt.events = std::move(draw.events);
    nxt.rates = sample_rates(nxt.states, nxt.events, sp, prior.rate, dt, rng);
    nxt.emission = sample_emissions(series, nxt.states, prior.emission, rng);
    if (out_loglik) *out_loglik = draw.loglik;
    return nxt;
}

// Split-half potential scale reduction over one or more sequences.
inline double psrf_segments(const std::vector<std::vector<double>>& segments) {
    std::size_t n = std::numeric_limits<std::size_t>::max();
    for (const auto& seg : segments) n = std::min(n, seg.size());
    if (segments.size() < 2 || n < 2) return 1.0;
    const double m = static_cast<double>(segments.size());
    std::vector<double> means;
    double W = 0.0;
    for (const auto& seg : segments) {
        double mu = 0.0;
        for (std::size_t i = 0; i < n; ++i) mu += seg[i];
        mu /= n;
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) v += (seg[i] - mu) * (seg[i] - mu);
        means.push_back(mu);
        W += v / (n - 1);
    }
    W /= m;
    double grand = 0.0;
    for (double mu : means) grand += mu;
    grand /= m;
    double B = 0.0;
    for (double mu : means) B += (mu - grand) * (mu - grand);
    B *= static_cast<double>(n) / (m - 1.0);
    if (W <= 0.0) return 1.0;
    const double var_hat = (static_cast<double>(n) - 1.0) / n * W + B / n;
    return std::sqrt(var_hat / W);
}

inline Chain run_chain(const ObservationSeries& series, const EventCatalog& catalog,
                       const GibbsConfig& config) {
    config.validate();
    series.validate();
    if (series.speaker_count != catalog.speaker_count())
        throw DataError("run_chain: series/catalog speaker count mismatch");
    const PriorConfig prior =
        config.prior ? *config.prior : default_prior(catalog, series);
    prior.rate.validate(catalog);
    const StateSpace sp = build_state_space(catalog);
    Rng rng(config.seed);

    Chain chain;
    PosteriorSample cur = initial_sample(catalog, prior);
    for (int sweep = 0; sweep < config.sweeps; ++sweep) {
        double ll = 0.0;
        cur = gibbs_sweep(cur, series, catalog, sp, prior, config.dt_s, rng, &ll);
        chain.sweep_loglik.push_back(ll);
        if (sweep >= config.burn_in && (sweep - config.burn_in) % config.thinning == 0)
            chain.samples.push_back(cur);
    }

    const int V = catalog.event_count();
    chain.rate_summary.resize(V);
    const std::size_t n = chain.samples.size();
    for (int i = 0; i < V; ++i) {
        std::vector<double> xs(n);
        for (std::size_t j = 0; j < n; ++j) xs[j] = chain.samples[j].rates[i];
        double mu = 0.0;
        for (double x : xs) mu += x;
        mu /= n;
        double var = 0.0;
        for (double x : xs) var += (x - mu) * (x - mu);
        RateSummary& rs = chain.rate_summary[i];
        rs.mean = mu;
        rs.sd = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
        if (n >= 4) {
            const std::size_t half = n / 2;
            rs.psrf = psrf_segments({std::vector<double>(xs.begin(), xs.begin() + half),
                                     std::vector<double>(xs.begin() + half, xs.end())});
        }
    }
    return chain;
}

} // namespace turnmjp

#pragma once
// Observation model: while a speaker holds status s (0 silent, 1 speaking)
// their per-slot feature vector (audio log-variance, motion log-variance,
// facing count) is Gaussian with a status-specific mean and covariance.
// Channels can be missing per slot; the likelihood marginalizes them out
// by restricting to the observed sub-block.
//
// Conjugate updates use the Normal-Inverse-Wishart family: given complete
// frames assigned to a (speaker, status) cell, the posterior is again NIW
// and can be sampled (Bartlett decomposition for the Wishart part).

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "catalog.hpp"
#include "rng.hpp"
#include "simulate.hpp"

namespace turnmjp {

constexpr int kEmissionDims = 3;

struct SpeakerFrame {
    std::optional<double> audio;    // log-variance of the audio signal
    std::optional<double> motion;   // log-variance of body motion
    std::optional<double> facing;   // how many others face this speaker

    std::optional<double> channel(int i) const {
        switch (i) {
            case 0: return audio;
            case 1: return motion;
            case 2: return facing;
        }
        throw ConfigError("SpeakerFrame: channel index out of range");
    }
    void set_channel(int i, double v) {
        switch (i) {
            case 0: audio = v; return;
            case 1: motion = v; return;
            case 2: facing = v; return;
        }
        throw ConfigError("SpeakerFrame: channel index out of range");
    }
    bool complete() const { return audio && motion && facing; }
    Eigen::Vector3d dense() const {
        if (!complete())
            throw DataError("SpeakerFrame: dense() needs all channels present");
        return {*audio, *motion, *facing};
    }
};

using ObservationFrame = std::vector<SpeakerFrame>;  // one entry per speaker

struct ObservationSeries {
    std::vector<ObservationFrame> frames;  // one per slot
    double dt_s = 0.0;
    int speaker_count = 0;

    int slot_count() const { return static_cast<int>(frames.size()); }
    void validate() const {
        if (speaker_count < 1)
            throw DataError("ObservationSeries: speaker count not set");
        if (!(dt_s > 0.0))
            throw DataError("ObservationSeries: dt must be positive");
        for (const ObservationFrame& f : frames)
            if (static_cast<int>(f.size()) != speaker_count)
                throw DataError("ObservationSeries: frame width != speaker count");
    }
};

struct StatusGaussian {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Matrix3d cov = Eigen::Matrix3d::Identity();
};

// params[speaker][status]
struct EmissionParams {
    std::vector<std::array<StatusGaussian, 2>> by_speaker;

    int speaker_count() const { return static_cast<int>(by_speaker.size()); }
    const StatusGaussian& at(int speaker, int status) const {
        return by_speaker.at(speaker).at(status);
    }
    StatusGaussian& at(int speaker, int status) {
        return by_speaker.at(speaker).at(status);
    }
};

// Gaussian log density of the observed channels; missing channels are
// integrated out, so a frame with nothing observed contributes 0.
inline double frame_loglik(const StatusGaussian& g, const SpeakerFrame& frame) {
    int idx[kEmissionDims];
    int n = 0;
    for (int i = 0; i < kEmissionDims; ++i)
        if (frame.channel(i)) idx[n++] = i;
    if (n == 0) return 0.0;

    Eigen::VectorXd resid(n);
    Eigen::MatrixXd sub(n, n);
    for (int r = 0; r < n; ++r) {
        resid(r) = *frame.channel(idx[r]) - g.mean(idx[r]);
        for (int c = 0; c < n; ++c) sub(r, c) = g.cov(idx[r], idx[c]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(sub);
    if (llt.info() != Eigen::Success)
        throw NumericError("frame_loglik: covariance sub-block not positive definite");
    const Eigen::VectorXd alpha = llt.solve(resid);
    double logdet = 0.0;
    for (int i = 0; i < n; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    return -0.5 * (n * std::log(2.0 * M_PI) + logdet + resid.dot(alpha));
}

struct NiwParams {
    double kappa = 1.0;                                   // mean precision scale
    double nu = kEmissionDims + 2.0;                      // wishart dof, > dims - 1
    Eigen::Vector3d mu0 = Eigen::Vector3d::Zero();
    Eigen::Matrix3d psi = Eigen::Matrix3d::Identity();    // inverse scale

    void validate() const {
        if (!(kappa > 0.0))
            throw ConfigError("NiwParams: kappa must be positive");
        if (!(nu > kEmissionDims - 1))
            throw ConfigError("NiwParams: nu must exceed dims - 1");
    }
};

inline NiwParams niw_update(const NiwParams& prior, const std::vector<Eigen::Vector3d>& data) {
    prior.validate();
    const int n = static_cast<int>(data.size());
    if (n == 0) return prior;
    Eigen::Vector3d ybar = Eigen::Vector3d::Zero();
    for (const auto& y : data) ybar += y;
    ybar /= n;
    Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
    for (const auto& y : data) scatter += (y - ybar) * (y - ybar).transpose();

    NiwParams post;
    post.kappa = prior.kappa + n;
    post.nu = prior.nu + n;
    post.mu0 = (prior.kappa * prior.mu0 + n * ybar) / post.kappa;
    const Eigen::Vector3d d = ybar - prior.mu0;
    post.psi = prior.psi + scatter + (prior.kappa * n / post.kappa) * (d * d.transpose());
    return post;
}

// Wishart(nu, S) draw via Bartlett: W = L A A^T L^T with S = L L^T.
inline Eigen::Matrix3d wishart_sample(double nu, const Eigen::Matrix3d& scale, Rng& rng) {
    if (!(nu > kEmissionDims - 1))
        throw ConfigError("wishart_sample: dof too small");
    Eigen::LLT<Eigen::Matrix3d> llt(scale);
    if (llt.info() != Eigen::Success)
        throw NumericError("wishart_sample: scale matrix not positive definite");
    Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
    for (int i = 0; i < kEmissionDims; ++i) {
        A(i, i) = std::sqrt(rng.chi_square(nu - i));
        for (int j = 0; j < i; ++j) A(i, j) = rng.normal();
    }
    const Eigen::Matrix3d LA = llt.matrixL() * A;
    return LA * LA.transpose();
}

// One draw (mu, Sigma) from the NIW: Sigma inverse-Wishart(nu, psi), then
// mu Gaussian around mu0 with covariance Sigma / kappa.
inline StatusGaussian niw_sample(const NiwParams& p, Rng& rng) {
    p.validate();
    const Eigen::Matrix3d psi_inv = p.psi.llt().solve(Eigen::Matrix3d::Identity());
    const Eigen::Matrix3d w = wishart_sample(p.nu, psi_inv, rng);
    StatusGaussian g;
    g.cov = w.llt().solve(Eigen::Matrix3d::Identity());
    g.cov = 0.5 * (g.cov + g.cov.transpose().eval());  // clear asymmetry drift
    Eigen::Vector3d z;
    for (int i = 0; i < kEmissionDims; ++i) z(i) = rng.normal();
    const Eigen::LLT<Eigen::Matrix3d> llt(g.cov);
    if (llt.info() != Eigen::Success)
        throw NumericError("niw_sample: sampled covariance not positive definite");
    g.mean = p.mu0 + Eigen::Matrix3d(llt.matrixL()) * z / std::sqrt(p.kappa);
    return g;
}

// Base rates by event kind, in events/second. Starting points for
// inference, deliberately diffuse.
struct RatePrior {
    RateVector mean_rate;        // per event id
    double pseudo_slots = 50.0;  // prior weight, in units of observed slots

    void validate(const EventCatalog& catalog) const {
        if (static_cast<int>(mean_rate.size()) != catalog.event_count())
            throw ConfigError("RatePrior: mean_rate length != catalog size");
        for (double h : mean_rate)
            if (!(h > 0.0))
                throw ConfigError("RatePrior: prior mean rates must be positive");
        if (!(pseudo_slots > 0.0))
            throw ConfigError("RatePrior: pseudo_slots must be positive");
    }
};

inline double default_kind_rate(EventKind k) {
    switch (k) {
        case EventKind::Take: return 0.3;
        case EventKind::Yield: return 0.8;
        case EventKind::Transfer: return 0.2;
        case EventKind::Backchannel: return 0.3;
        case EventKind::Seize: return 0.05;
        case EventKind::YieldCompetition: return 1.0;
    }
    return 0.1;
}

inline RatePrior default_rate_prior(const EventCatalog& catalog) {
    RatePrior p;
    p.mean_rate.resize(catalog.event_count());
    for (const EventSpec& e : catalog.events())
        p.mean_rate[e.id] = default_kind_rate(e.kind);
    return p;
}

struct PriorConfig {
    std::array<NiwParams, 2> emission;  // by status, shared across speakers
    RatePrior rate;
};

// Data-driven emission prior: pool complete frames across speakers, split
// them with a deterministic 2-means on the standardized channels, and
// centre the status-0/1 priors on the low/high-audio cluster medians.
inline std::array<NiwParams, 2> default_emission_prior(const ObservationSeries& series) {
    series.validate();
    std::vector<Eigen::Vector3d> pool;
    for (const ObservationFrame& f : series.frames)
        for (const SpeakerFrame& sf : f)
            if (sf.complete()) pool.push_back(sf.dense());
    const int n = static_cast<int>(pool.size());
    if (n < 20)
        throw DataError("default_emission_prior: need at least 20 complete frames");

    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& y : pool) mean += y;
    mean /= n;
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& y : pool) cov += (y - mean) * (y - mean).transpose();
    cov /= std::max(1, n - 1);
    Eigen::Vector3d sd;
    for (int i = 0; i < 3; ++i) sd(i) = std::sqrt(std::max(cov(i, i), 1e-12));

    // 2-means seeded at the 10th / 90th audio percentiles of the pool.
    std::vector<double> audio(n);
    for (int i = 0; i < n; ++i) audio[i] = pool[i](0);
    std::vector<double> sorted = audio;
    std::sort(sorted.begin(), sorted.end());
    auto percentile = [&](double q) {
        const double pos = q * (n - 1);
        const int lo = static_cast<int>(pos);
        const int hi = std::min(lo + 1, n - 1);
        return sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
    };
    std::array<Eigen::Vector3d, 2> centre = {mean, mean};
    centre[0](0) = percentile(0.10);
    centre[1](0) = percentile(0.90);

    std::vector<int> assign(n, -1);
    for (int iter = 0; iter < 100; ++iter) {
        bool moved = false;
        std::array<Eigen::Vector3d, 2> sum = {Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()};
        std::array<int, 2> cnt = {0, 0};
        for (int i = 0; i < n; ++i) {
            double best = 0.0;
            int pick = 0;
            for (int k = 0; k < 2; ++k) {
                const Eigen::Vector3d d = (pool[i] - centre[k]).cwiseQuotient(sd);
                const double dist = d.squaredNorm();
                if (k == 0 || dist < best) {
                    best = dist;
                    pick = k;
                }
            }
            if (assign[i] != pick) moved = true;
            assign[i] = pick;
            sum[pick] += pool[i];
            cnt[pick] += 1;
        }
        for (int k = 0; k < 2; ++k)
            if (cnt[k] > 0) centre[k] = sum[k] / cnt[k];
        if (!moved) break;
    }
    // Status 0 is the lower-audio cluster.
    int lo_cluster = centre[0](0) <= centre[1](0) ? 0 : 1;

    std::array<NiwParams, 2> prior;
    Eigen::Matrix3d within = Eigen::Matrix3d::Zero();
    int within_n = 0;
    for (int status = 0; status < 2; ++status) {
        const int k = status == 0 ? lo_cluster : 1 - lo_cluster;
        std::array<std::vector<double>, 3> ch;
        for (int i = 0; i < n; ++i)
            if (assign[i] == k)
                for (int d = 0; d < 3; ++d) ch[d].push_back(pool[i](d));
        NiwParams& p = prior[status];
        p.kappa = 1.0;
        p.nu = 5.0;
        for (int d = 0; d < 3; ++d) {
            if (ch[d].empty()) {
                p.mu0(d) = mean(d);
                continue;
            }
            std::sort(ch[d].begin(), ch[d].end());
            p.mu0(d) = ch[d][ch[d].size() / 2];
        }
        for (int i = 0; i < n; ++i) {
            if (assign[i] != k) continue;
            const Eigen::Vector3d r = pool[i] - centre[k];
            within += r * r.transpose();
            ++within_n;
        }
    }
    Eigen::Matrix3d psi = within / std::max(1, within_n - 1);
    psi += 1e-6 * Eigen::Matrix3d::Identity();
    // nu - dims - 1 = 1 here, so E[Sigma] equals the within-cluster scatter.
    for (int status = 0; status < 2; ++status) prior[status].psi = psi;
    return prior;
}

inline PriorConfig default_prior(const EventCatalog& catalog, const ObservationSeries& series) {
    PriorConfig cfg;
    cfg.emission = default_emission_prior(series);
    cfg.rate = default_rate_prior(catalog);
    return cfg;
}

// Stock synthetic sensors, shared by every speaker: speaking raises the
// audio log-variance by about three standard deviations and nudges
// motion and facing counts upward.  Channel order: audio log-variance,
// motion log-variance, facing count.
inline EmissionParams default_emission_params(int speaker_count) {
    StatusGaussian silent;
    silent.mean << -3.0, -1.0, 0.8;
    silent.cov = Eigen::Vector3d(0.5, 0.6, 0.7).asDiagonal();
    StatusGaussian speaking;
    speaking.mean << -0.5, -0.3, 1.8;
    speaking.cov = Eigen::Vector3d(0.6, 0.7, 0.9).asDiagonal();
    EmissionParams params;
    params.by_speaker.assign(static_cast<std::size_t>(speaker_count),
                             std::array<StatusGaussian, 2>{silent, speaking});
    return params;
}

// Forward model for the observations of a simulated slot trajectory.
// missing_prob knocks out individual channels at random.
inline ObservationSeries generate_observations(const EventCatalog& catalog,
                                               const SlotTrajectory& traj,
                                               const EmissionParams& params, Rng& rng,
                                               double missing_prob = 0.0) {
    if (params.speaker_count() != catalog.speaker_count())
        throw ConfigError("generate_observations: params/catalog speaker count mismatch");
    if (missing_prob < 0.0 || missing_prob >= 1.0)
        throw ConfigError("generate_observations: missing_prob must be in [0, 1)");
    ObservationSeries series;
    series.dt_s = traj.dt_s;
    series.speaker_count = catalog.speaker_count();
    const std::vector<StateVector> states = states_during(traj, catalog);
    series.frames.reserve(states.size());
    std::vector<Eigen::Matrix3d> chol(params.speaker_count() * 2);
    for (int c = 0; c < params.speaker_count(); ++c)
        for (int s = 0; s < 2; ++s) {
            Eigen::LLT<Eigen::Matrix3d> llt(params.at(c, s).cov);
            if (llt.info() != Eigen::Success)
                throw NumericError("generate_observations: covariance not positive definite");
            chol[2 * c + s] = llt.matrixL();
        }
    for (const StateVector& x : states) {
        ObservationFrame frame(series.speaker_count);
        for (int c = 0; c < series.speaker_count; ++c) {
            const int s = x.speaking(c) ? 1 : 0;
            Eigen::Vector3d z;
            for (int d = 0; d < 3; ++d) z(d) = rng.normal();
            const Eigen::Vector3d y = params.at(c, s).mean + chol[2 * c + s] * z;
            for (int d = 0; d < 3; ++d)
                if (missing_prob == 0.0 || rng.u01() >= missing_prob)
                    frame[c].set_channel(d, y(d));
        }
        series.frames.push_back(std::move(frame));
    }
    return series;
}

} // namespace turnmjp

// Constant-hazard duration model with additive covariate effects,
// lambda(X) = lambda0 + beta.X, fitted by constrained Newton ascent.  A
// multiplicative variant (lambda0 * exp(beta.X)) is available behind a
// flag for comparison.  Covariates here are conversational event rates
// in events/second; durations are seconds.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "turnmjp/errors.hpp"
#include "turnmjp/events.hpp"

namespace turnmjp {

struct SurvivalRecord {
    double duration_s = 0.0;  // time to elimination, or censoring time
    std::vector<double> covariates;
    bool censored = false;
};

struct HazardFit {
    double baseline = 0.0;
    std::vector<double> beta;
    bool multiplicative = false;
    double loglik = -std::numeric_limits<double>::infinity();
    double variance_explained = 0.0;   // squared correlation, observed vs 1/lambda
    std::vector<bool> unidentifiable;  // covariates with zero sample variance
    bool baseline_only = false;        // every covariate was unidentifiable
    std::vector<double> ll_trace;      // log likelihood after each iteration

    double hazard(const std::vector<double>& x) const {
        if (x.size() != beta.size())
            throw ConfigError("hazard: covariate dimension mismatch");
        double dot = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) dot += beta[j] * x[j];
        return multiplicative ? baseline * std::exp(dot) : baseline + dot;
    }
};

namespace detail {

struct HazardData {
    Eigen::MatrixXd x;      // n x (1+m), first column all ones
    Eigen::VectorXd t;      // durations
    Eigen::VectorXd event;  // 1 = uncensored
};

// Log likelihood of theta; -inf when infeasible (additive only).
inline double hazard_loglik(const HazardData& d, const Eigen::VectorXd& theta,
                            bool multiplicative) {
    const Eigen::VectorXd eta = d.x * theta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < d.t.size(); ++i) {
        const double lam = multiplicative ? std::exp(eta[i]) : eta[i];
        if (!multiplicative) {
            if (lam < 0.0) return -std::numeric_limits<double>::infinity();
            if (d.event[i] > 0.5 && lam <= 0.0)
                return -std::numeric_limits<double>::infinity();
        }
        if (d.event[i] > 0.5) ll += std::log(lam);
        ll -= lam * d.t[i];
    }
    return ll;
}

inline void hazard_derivs(const HazardData& d, const Eigen::VectorXd& theta,
                          bool multiplicative, Eigen::VectorXd& grad,
                          Eigen::MatrixXd& hess) {
    const Eigen::Index p = theta.size();
    grad.setZero(p);
    hess.setZero(p, p);
    const Eigen::VectorXd eta = d.x * theta;
    for (Eigen::Index i = 0; i < d.t.size(); ++i) {
        const auto xi = d.x.row(i).transpose();
        if (multiplicative) {
            const double lam = std::exp(eta[i]);
            const double w = d.event[i] - lam * d.t[i];
            grad += w * xi;
            hess -= lam * d.t[i] * (xi * xi.transpose());
        } else {
            const double lam = eta[i];
            if (d.event[i] > 0.5) {
                grad += (1.0 / lam) * xi - d.t[i] * xi;
                hess -= (1.0 / (lam * lam)) * (xi * xi.transpose());
            } else {
                grad -= d.t[i] * xi;
            }
        }
    }
}

} // namespace detail

// Maximum-likelihood fit.  Covariates with zero sample variance are
// dropped from the design (their coefficients are indistinguishable from
// the baseline), reported as zero, and flagged.  Requires at least one
// uncensored record.  The optimizer is damped Newton with a feasibility-
// preserving backtracking line search; the log likelihood is concave, so
// the trace is monotone and the stall/tolerance exit is the optimum.
inline HazardFit fit_hazard(const std::vector<SurvivalRecord>& records,
                            bool multiplicative = false) {
    if (records.size() < 2) throw DataError("fit_hazard: need at least 2 records");
    const std::size_t k = records.front().covariates.size();
    double total_time = 0.0;
    int n_events = 0;
    for (const SurvivalRecord& r : records) {
        if (!(r.duration_s > 0.0) || !std::isfinite(r.duration_s))
            throw DataError("fit_hazard: durations must be positive and finite");
        if (r.covariates.size() != k)
            throw DataError("fit_hazard: inconsistent covariate dimensions");
        for (double v : r.covariates)
            if (!std::isfinite(v)) throw DataError("fit_hazard: covariates must be finite");
        total_time += r.duration_s;
        if (!r.censored) ++n_events;
    }
    if (n_events == 0) throw DataError("fit_hazard: every record is censored");

    HazardFit fit;
    fit.multiplicative = multiplicative;
    fit.beta.assign(k, 0.0);
    fit.unidentifiable.assign(k, false);

    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < k; ++j) {
        double lo = records.front().covariates[j], hi = lo;
        for (const SurvivalRecord& r : records) {
            lo = std::min(lo, r.covariates[j]);
            hi = std::max(hi, r.covariates[j]);
        }
        if (hi > lo) active.push_back(j);
        else fit.unidentifiable[j] = true;
    }
    fit.baseline_only = k > 0 && active.empty();

    const auto n = static_cast<Eigen::Index>(records.size());
    const auto m = static_cast<Eigen::Index>(active.size());
    detail::HazardData data;
    data.x.resize(n, 1 + m);
    data.t.resize(n);
    data.event.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        data.x(i, 0) = 1.0;
        for (Eigen::Index j = 0; j < m; ++j)
            data.x(i, 1 + j) = records[static_cast<std::size_t>(i)]
                                   .covariates[active[static_cast<std::size_t>(j)]];
        data.t[i] = records[static_cast<std::size_t>(i)].duration_s;
        data.event[i] = records[static_cast<std::size_t>(i)].censored ? 0.0 : 1.0;
    }

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(1 + m);
    theta[0] = multiplicative ? std::log(n_events / total_time) : n_events / total_time;
    double ll = detail::hazard_loglik(data, theta, multiplicative);
    if (!std::isfinite(ll)) throw NumericError("fit_hazard: infeasible starting point");
    fit.ll_trace.push_back(ll);

    Eigen::VectorXd grad(1 + m);
    Eigen::MatrixXd hess(1 + m, 1 + m);
    bool converged = false;
    for (int iter = 0; iter < 500 && !converged; ++iter) {
        detail::hazard_derivs(data, theta, multiplicative, grad, hess);
        Eigen::MatrixXd neg_h = -hess;
        neg_h.diagonal().array() += 1e-12 * (1.0 + neg_h.diagonal().maxCoeff());
        const Eigen::VectorXd dir = neg_h.ldlt().solve(grad);

        double step = 1.0;
        double ll_new = ll;
        Eigen::VectorXd cand = theta;
        while (step > 1e-14) {
            cand = theta + step * dir;
            // The baseline itself must stay nonnegative in the additive model.
            if (multiplicative || cand[0] >= 0.0) {
                ll_new = detail::hazard_loglik(data, cand, multiplicative);
                if (std::isfinite(ll_new) && ll_new >= ll) break;
            }
            step *= 0.5;
        }
        if (step <= 1e-14) {
            converged = true;  // stalled against a constraint or at the optimum
            break;
        }
        theta = cand;
        fit.ll_trace.push_back(ll_new);
        converged = std::fabs(ll_new - ll) < 1e-8;
        ll = ll_new;
    }
    if (!converged) throw NumericError("fit_hazard: Newton iteration did not converge");

    fit.baseline = multiplicative ? std::exp(theta[0]) : theta[0];
    for (Eigen::Index j = 0; j < m; ++j)
        fit.beta[active[static_cast<std::size_t>(j)]] = theta[1 + j];
    fit.loglik = ll;

    // Squared correlation between observed uncensored durations and the
    // model's expected duration 1/lambda.
    std::vector<double> obs, pred;
    for (const SurvivalRecord& r : records) {
        if (r.censored) continue;
        const double lam = fit.hazard(r.covariates);
        if (lam <= 0.0) continue;
        obs.push_back(r.duration_s);
        pred.push_back(1.0 / lam);
    }
    if (obs.size() >= 2) {
        const double n_d = static_cast<double>(obs.size());
        double mo = 0.0, mp = 0.0;
        for (std::size_t i = 0; i < obs.size(); ++i) {
            mo += obs[i];
            mp += pred[i];
        }
        mo /= n_d;
        mp /= n_d;
        double sxy = 0.0, sxx = 0.0, syy = 0.0;
        for (std::size_t i = 0; i < obs.size(); ++i) {
            sxy += (obs[i] - mo) * (pred[i] - mp);
            sxx += (obs[i] - mo) * (obs[i] - mo);
            syy += (pred[i] - mp) * (pred[i] - mp);
        }
        if (sxx > 0.0 && syy > 0.0)
            fit.variance_explained =
                std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
    }
    return fit;
}

// S(t) = exp(-lambda(X) * t) for the constant-hazard model.
inline double survival_function(const HazardFit& fit, const std::vector<double>& x,
                                double t_s) {
    if (t_s < 0.0) throw ConfigError("survival_function: t must be nonnegative");
    const double lam = fit.hazard(x);
    if (lam < 0.0) throw DataError("survival_function: negative hazard at covariates");
    return std::exp(-lam * t_s);
}

inline double cumulative_hazard(const HazardFit& fit, const std::vector<double>& x,
                                double t_s) {
    if (t_s < 0.0) throw ConfigError("cumulative_hazard: t must be nonnegative");
    const double lam = fit.hazard(x);
    if (lam < 0.0) throw DataError("cumulative_hazard: negative hazard at covariates");
    return lam * t_s;
}

// Expected fraction of the remaining answer space removed over one
// inter-question interval, from the event counts observed in it.  The
// fit must use the standard four covariates, in order: take, transfer,
// backchannel, competition rates (events/second).
inline double question_effect(const EventCounts& counts, const HazardFit& fit) {
    if (fit.beta.size() != 4)
        throw ConfigError("question_effect: fit must have the 4 standard covariates");
    if (!(counts.window_length_s > 0.0))
        throw DataError("question_effect: window length must be positive");
    const double w = counts.window_length_s;
    const std::vector<double> x = {counts.take / w, counts.transfer / w,
                                   counts.backchannel / w, counts.competition_win / w};
    return 1.0 - survival_function(fit, x, w);
}

} // namespace turnmjp

#pragma once
// Small numerics shared by the statistics code: regularized incomplete
// beta (for t/F tail probabilities), normal cdf tails, and the Kolmogorov
// distribution tail used by the uniformity checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"

namespace turnmjp {

// Continued fraction for the regularized incomplete beta, Lentz's method.
inline double betainc_cf(double a, double b, double x) {
    const double tiny = 1e-300;
    const double eps = 1e-15;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h;
    }
    throw NumericError("betainc: continued fraction did not converge");
}

// Regularized incomplete beta I_x(a, b).
inline double betainc(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0))
        throw ConfigError("betainc: shape parameters must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b)
        + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * betainc_cf(a, b, x) / a;
    return 1.0 - front * betainc_cf(b, a, 1.0 - x) / b;
}

inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

// Upper tail P(Z > z), accurate for large z where 1 - cdf cancels.
inline double normal_sf(double z) {
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

// Upper tail of the F(d1, d2) distribution via the incomplete beta.
inline double f_sf(double f, double d1, double d2) {
    if (f <= 0.0) return 1.0;
    if (!(d1 > 0.0) || !(d2 > 0.0))
        throw ConfigError("f_sf: degrees of freedom must be positive");
    return betainc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

// Kolmogorov distribution tail P(K > x) = 2 sum_{k>=1} (-1)^{k+1} exp(-2 k^2 x^2).
inline double kolmogorov_sf(double x) {
    if (x <= 0.0) return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        s += (k % 2 == 1 ? term : -term);
        if (term < 1e-16) break;
    }
    const double p = 2.0 * s;
    return p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p);
}

// One-sample Kolmogorov-Smirnov p-value against U(0,1); values must lie in
// [0,1]. Asymptotic tail with the Stephens small-sample adjustment.
inline double ks_uniform_pvalue(std::vector<double> values) {
    const std::size_t n = values.size();
    if (n < 10)
        throw DataError("ks_uniform_pvalue: need at least 10 values");
    std::sort(values.begin(), values.end());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = values[i];
        if (v < 0.0 || v > 1.0)
            throw DataError("ks_uniform_pvalue: value outside [0,1]");
        const double hi = (static_cast<double>(i) + 1.0) / n - v;
        const double lo = v - static_cast<double>(i) / n;
        d = std::max({d, hi, lo});
    }
    const double sn = std::sqrt(static_cast<double>(n));
    return kolmogorov_sf(d * (sn + 0.12 + 0.11 / sn));
}

// Linear-interpolation percentile (q in [0,100]) over a copy of the data.
inline double percentile_interp(std::vector<double> values, double q) {
    if (values.empty())
        throw DataError("percentile_interp: empty input");
    if (q < 0.0 || q > 100.0)
        throw ConfigError("percentile_interp: q outside [0,100]");
    std::sort(values.begin(), values.end());
    const double pos = q / 100.0 * (static_cast<double>(values.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - lo) * (values[hi] - values[lo]);
}

// Two-sample Kolmogorov-Smirnov p-value (asymptotic). With heavily tied
// samples the test is conservative, which suits its use here: accepting a
// true null hypothesis.
inline double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
    if (a.size() < 10 || b.size() < 10)
        throw DataError("ks_two_sample_pvalue: need at least 10 values per sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::fabs(i / na - j / nb));
    }
    return kolmogorov_sf(d * std::sqrt(na * nb / (na + nb)));
}

// FNV-1a 64-bit; used to fingerprint config payloads in run manifests.
inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace turnmjp

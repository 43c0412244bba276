#pragma once
// Seeded random source. Samplers are implemented explicitly (not via
// std::*_distribution, whose output is not pinned by the standard) so a
// seed reproduces the same stream on any platform. Substreams for chains,
// replicates and groups are derived by hashing (seed, tag).

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "errors.hpp"

namespace turnmjp {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), gen_(splitmix64(seed)) {}

    std::uint64_t seed() const { return seed_; }

    // Independent deterministic substream identified by tag.
    Rng fork(std::uint64_t tag) const {
        return Rng(splitmix64(seed_ ^ (0x632be59bd9b4e019ull * (tag + 1))));
    }

    // Uniform on the open interval (0, 1), 53-bit resolution.
    double u01() {
        return (static_cast<double>(gen_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    double uniform(double lo, double hi) {
        if (!(lo < hi)) throw ConfigError("uniform: need lo < hi");
        return lo + (hi - lo) * u01();
    }

    int uniform_int(int n) {  // 0 .. n-1
        if (n <= 0) throw ConfigError("uniform_int: n must be positive");
        int v = static_cast<int>(u01() * n);
        return v < n ? v : n - 1;
    }

    double exponential(double rate) {
        if (!(rate > 0.0)) throw ConfigError("exponential: rate must be positive");
        return -std::log(u01()) / rate;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = u01();
        const double u2 = u01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // Marsaglia-Tsang; shape < 1 handled by the boost u^(1/shape).
    double gamma(double shape, double scale = 1.0) {
        if (!(shape > 0.0) || !(scale > 0.0)) throw ConfigError("gamma: shape/scale must be positive");
        if (shape < 1.0) {
            const double u = u01();
            return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = u01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
        }
    }

    double chi_square(double dof) { return gamma(0.5 * dof, 2.0); }

    double beta(double a, double b) {
        const double ga = gamma(a);
        const double gb = gamma(b);
        return ga / (ga + gb);
    }

    std::vector<double> dirichlet(const std::vector<double>& alpha) {
        std::vector<double> g(alpha.size());
        double total = 0.0;
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            g[i] = gamma(alpha[i]);
            total += g[i];
        }
        for (double& v : g) v /= total;
        return g;
    }

    // Index drawn proportionally to nonnegative weights.
    int categorical(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        if (!(total > 0.0)) throw NumericError("categorical: weights sum to zero");
        double u = u01() * total;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            u -= weights[i];
            if (u <= 0.0) return static_cast<int>(i);
        }
        return static_cast<int>(weights.size()) - 1;
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace turnmjp

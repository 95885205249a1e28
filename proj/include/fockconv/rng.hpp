#pragma once

#include <cmath>
#include <cstdint>

namespace fockconv {

/// Splittable generator: stream `i` of a given seed draws its state from a
/// disjoint window of the splitmix64 sequence and then runs xoshiro256++.
/// Trial i of a simulation uses stream i, so serial and parallel runs of
/// any schedule produce identical results.
class SubstreamRng {
public:
    SubstreamRng(std::uint64_t seed, std::uint64_t stream) {
        // Five splitmix64 steps per stream: four state words plus a gap.
        std::uint64_t x = seed + stream * 5 * 0x9E3779B97F4A7C15ULL;
        for (auto& word : state_) word = splitmix64(x);
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    std::uint64_t next() noexcept {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Exact binomial sample by CDF inversion; n is small (<= 64) so the
    /// linear walk is both exact and fast.
    int binomial(int n, double p) noexcept {
        if (n <= 0 || p <= 0.0) return 0;
        if (p >= 1.0) return n;
        const double u = uniform();
        const double ratio = p / (1.0 - p);
        double pmf = std::pow(1.0 - p, n);
        double cdf = pmf;
        int k = 0;
        while (cdf <= u && k < n) {
            pmf *= ratio * static_cast<double>(n - k) / static_cast<double>(k + 1);
            cdf += pmf;
            ++k;
        }
        return k;
    }

    /// Poisson sample by CDF inversion; fine for the small means used here.
    int poisson(double mu) noexcept {
        if (mu <= 0.0) return 0;
        const double u = uniform();
        double pmf = std::exp(-mu);
        double cdf = pmf;
        int k = 0;
        while (cdf <= u && k < 1024) {
            ++k;
            pmf *= mu / static_cast<double>(k);
            cdf += pmf;
        }
        return k;
    }

private:
    static std::uint64_t splitmix64(std::uint64_t& x) noexcept {
        x += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t rotl(std::uint64_t v, int k) noexcept {
        return (v << k) | (v >> (64 - k));
    }

    std::uint64_t state_[4];
};

}  // namespace fockconv

#pragma once

// Seeded random stream shared by every stochastic operation.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the
// standard. The <random> distributions are not (libstdc++ and libc++ differ),
// so the few draws we need are implemented here on top of raw engine output.

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace grevo {

class Rng
{
public:
    using Engine = std::mt19937_64;

    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t uniform_index(std::uint64_t bound)
    {
        // rejection on the top of the range keeps the draw unbiased
        const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p)
    {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return uniform01() < p;
    }

    /// Poisson draw by Knuth's product-of-uniforms method; fine for small means.
    unsigned poisson(double mean)
    {
        const double limit = std::exp(-mean);
        unsigned k = 0;
        double prod = uniform01();
        while (prod > limit) {
            ++k;
            prod *= uniform01();
        }
        return k;
    }

    /// FNV-1a digest of the full engine state; used in telemetry.
    std::uint64_t state_digest() const
    {
        std::ostringstream os;
        os << engine_;
        const std::string s = os.str();
        std::uint64_t h = 14695981039346656037ull;
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
        return h;
    }

    friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

private:
    Engine engine_;
};

} // namespace grevo

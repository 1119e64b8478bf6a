// Core aliases, error types, deterministic RNG, and small utilities shared
// across the hydronet library.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace hydronet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// ----------------------------------------------------------------------------
// Errors
// ----------------------------------------------------------------------------

/// Input file could not be parsed (bad JSON / CSV / schema).
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Input parsed but violates a documented invariant.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical routine failed (non-convergence, singular system, ...).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// ----------------------------------------------------------------------------
// Deterministic RNG
//
// mt19937_64 output is pinned by the standard, but the <random> distributions
// are not. All distributions here are hand-rolled from raw engine bits so
// seeded runs are bit-identical across compilers.
// ----------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Mix an arbitrary list of 64-bit values into a single stream seed.
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t s = 0x5bd1e995u;
    for (std::uint64_t p : parts) {
        s ^= splitmix64(p) + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
    }
    return s;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (uses two engine draws per call).
    double gaussian() {
        double u1 = 0.0;
        do { u1 = uniform(); } while (u1 <= 0.0);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

    std::uint64_t bits() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

/// One-shot gaussian keyed by an event tuple. Used for sensor noise so that
/// re-simulated attack windows reuse exactly the noise draws of the clean run.
inline double keyed_gaussian(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                             std::uint64_t c) {
    Rng rng(mix_seed({seed, a, b, c}));
    return rng.gaussian();
}

// ----------------------------------------------------------------------------
// Hashing / provenance
// ----------------------------------------------------------------------------

inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value);

inline constexpr const char* kToolVersion = "0.1.0";

// ----------------------------------------------------------------------------
// Time formatting (fixed epoch, hourly steps; no wall clock anywhere)
// ----------------------------------------------------------------------------

/// Seconds since Unix epoch for 2024-01-01T00:00:00Z, the series start time.
inline constexpr std::int64_t kSeriesEpoch = 1704067200;

/// Format seconds-since-epoch as ISO-8601 UTC ("2024-01-01T00:00:00Z").
std::string iso8601_utc(std::int64_t unix_seconds);

/// Inverse of iso8601_utc. Throws ParseError on malformed input.
std::int64_t parse_iso8601_utc(const std::string& text);

// ----------------------------------------------------------------------------
// Misc
// ----------------------------------------------------------------------------

/// Shortest decimal string that round-trips the double exactly.
std::string format_double(double value);

std::string join(const std::vector<std::string>& parts, const std::string& sep);

}  // namespace hydronet

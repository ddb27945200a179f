#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace arsent {

/// FNV-1a over bytes, finished with a splitmix64 avalanche.
std::uint64_t hash_bytes(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t mix64(std::uint64_t x);

/// Combines a seed with any number of string/integer keys into a stream seed.
class SeedBuilder {
public:
    explicit SeedBuilder(std::uint64_t seed) : state_(mix64(seed)) {}
    SeedBuilder& add(std::string_view key);
    SeedBuilder& add(std::uint64_t key);
    std::uint64_t value() const { return state_; }

private:
    std::uint64_t state_;
};

/// Portable deterministic random stream.
///
/// std::mt19937_64 output is fixed by the standard; the distributions are not,
/// so range reduction and real conversion are done here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform real in [0, 1) with 53 bits of precision.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    /// Uniform integer in [0, n); n must be > 0.
    std::uint64_t below(std::uint64_t n);
    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t between(std::int64_t lo, std::int64_t hi);
    // Always consumes one draw so stream positions do not depend on p.
    bool bernoulli(double p) { return uniform01() < p; }

private:
    std::mt19937_64 engine_;
};

}  // namespace arsent

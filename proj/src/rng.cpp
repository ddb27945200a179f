#include "arsent/rng.hpp"

namespace arsent {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_bytes(std::string_view bytes, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return mix64(h);
}

SeedBuilder& SeedBuilder::add(std::string_view key) {
    // Length prefix keeps ("ab","c") distinct from ("a","bc").
    state_ = mix64(state_ ^ hash_bytes(key, 0xcbf29ce484222325ULL ^ key.size()));
    return *this;
}

SeedBuilder& SeedBuilder::add(std::uint64_t key) {
    state_ = mix64(state_ ^ mix64(key + 0x632be59bd9b4e019ULL));
    return *this;
}

std::uint64_t Rng::below(std::uint64_t n) {
    // Rejection sampling: discard the biased tail of the 64-bit range.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
}

std::int64_t Rng::between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
}

}  // namespace arsent

#pragma once

#include <cstdint>
#include <random>

namespace masrisk {

std::uint64_t splitmix64(std::uint64_t x);

// Stream seed for one agent in one round; independent of how many other agents exist.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t agent_index, std::int64_t round);

// Thin wrapper over mt19937_64 with distribution code that is identical on every
// standard library (std::uniform_int_distribution is implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    std::uint64_t below(std::uint64_t n);
    std::int64_t range(std::int64_t lo, std::int64_t hi);  // inclusive
    double uniform01();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    bool chance(double p) { return uniform01() < p; }

private:
    std::mt19937_64 engine_;
};

}  // namespace masrisk

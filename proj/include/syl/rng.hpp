#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace syl {

// Named substream of a run's master seed. Policies, arrivals, and sweep
// cells each get their own stream so that comparisons can share arrival
// randomness without sharing selection randomness. The uniform mapping
// is done by hand so outputs are identical across standard libraries.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::string_view name) : gen_(mix(seed, name)) {}

    std::uint64_t next() { return gen_(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

private:
    static std::uint64_t mix(std::uint64_t seed, std::string_view name) {
        std::uint64_t h = seed ^ 0xcbf29ce484222325ull;
        for (char c : name) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ull;  // FNV-1a
        }
        // splitmix64 finalizer
        h += 0x9e3779b97f4a7c15ull;
        h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
        h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
        return h ^ (h >> 31);
    }

    std::mt19937_64 gen_;
};

}  // namespace syl

#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace poseac {

// Deterministic RNG utilities. Every stage derives its own stream from
// (run seed, purpose tag) so stages can be re-run in isolation without
// disturbing each other's randomness.

uint64_t splitmix64(uint64_t& state);

// Stateless mix of two 64-bit values (seed + sub-id derivation).
uint64_t mix64(uint64_t a, uint64_t b);

// FNV-1a over the tag string, for naming RNG streams.
uint64_t tag_hash(std::string_view tag);

inline uint64_t derive_seed(uint64_t seed, std::string_view tag) {
    return mix64(seed, tag_hash(tag));
}
inline uint64_t derive_seed(uint64_t seed, std::string_view tag, uint64_t id) {
    return mix64(mix64(seed, tag_hash(tag)), id);
}

// Self-contained generator: xoshiro-style core with hand-rolled
// distributions so results do not depend on the standard library's
// distribution algorithms.
class Rng {
public:
    explicit Rng(uint64_t seed);

    uint64_t next_u64();
    // [0, 1)
    double uniform();
    double uniform(double lo, double hi);
    // Inclusive range.
    int uniform_int(int lo, int hi);
    // Standard normal via Box-Muller.
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }
    float normal_f() { return static_cast<float>(normal()); }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
            int j = uniform_int(0, i);
            std::swap(v[i], v[j]);
        }
    }

private:
    uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace poseac

#pragma once
// Deterministic, counter-based random streams.
//
// Reproducibility contract: every Monte Carlo estimate is a function of
// (master seed, experiment name, sample index) only.  Worker threads pull
// sample indices from a queue, so scheduling must not influence the draws;
// we therefore avoid stateful generators shared between samples and derive
// each draw by mixing a counter into a per-sample seed.

#include <cstdint>
#include <string_view>

namespace ulab {

inline constexpr std::uint64_t kGolden64 = 0x9E3779B97F4A7C15ULL;

// Finalizer of the splitmix64 generator; a well-tested 64-bit bijection.
inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

// FNV-1a, used to fold experiment names into seeds.
inline std::uint64_t hash_string(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::uint64_t combine_seed(std::uint64_t a, std::uint64_t b) {
    return mix64(a + kGolden64 * (b + 1));
}

// Seed for one Monte Carlo sample: hash(master_seed, experiment, index).
inline std::uint64_t sample_seed(std::uint64_t master, std::string_view experiment,
                                 std::uint64_t index) {
    return combine_seed(combine_seed(master, hash_string(experiment)), index);
}

// Map the top 53 bits to [0,1).
inline double to_unit(std::uint64_t x) {
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

// A stateless uniform stream: draw i is mix64(seed + (i+1)*golden), so the
// value of any draw is independent of the order the draws are requested in.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t bits(std::uint64_t i) const { return mix64(seed_ + (i + 1) * kGolden64); }
    double unit(std::uint64_t i) const { return to_unit(bits(i)); }
    std::uint64_t seed() const { return seed_; }

  private:
    std::uint64_t seed_;
};

}  // namespace ulab

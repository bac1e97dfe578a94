#pragma once

#include <cstdint>
#include <random>

namespace swedge {

// SplitMix64 finalizer.  Used to scramble raw seeds and to derive
// independent substream seeds from (root, id, ...) tuples.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Substream derivation: each id is folded into the state with one
// splitmix64 round, so derive_seed(root, a, b) and derive_seed(root, b, a)
// are distinct streams.  This is the counter scheme used for per-replicate,
// per-cluster, and per-chain generators.
inline std::uint64_t derive_seed(std::uint64_t root) { return splitmix64(root); }

template <typename... Ids>
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t id, Ids... rest) {
    return derive_seed(splitmix64(root ^ splitmix64(id + 0x632BE59BD9B4E019ULL)), rest...);
}

// mt19937_64 stream with explicit Box-Muller normals so that draws are
// reproducible across standard libraries (std::normal_distribution is
// implementation-defined).
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    // uniform on (0, 1]
    double uniform() {
        const std::uint64_t x = engine_() >> 11;  // 53 random bits
        return static_cast<double>(x + 1) * 0x1.0p-53;
    }

    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace swedge

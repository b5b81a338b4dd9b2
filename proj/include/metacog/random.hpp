#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace metacog {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

// Per-run seed: stable hash of (master seed, run index).
inline std::int64_t derive_seed(std::int64_t master, std::uint64_t index) {
    auto h = splitmix64(splitmix64(static_cast<std::uint64_t>(master)) ^ (index * 0xD1B54A32D192ED03ULL));
    return static_cast<std::int64_t>(h >> 1);
}

inline double unit_interval(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

// std distributions are implementation-defined; everything drawn here goes
// through the raw engine so streams are identical across standard libraries.
class Rng {
public:
    explicit Rng(std::int64_t seed) : engine_(static_cast<std::uint64_t>(seed)) {}

    double uniform() { return unit_interval(engine_()); }

    bool bernoulli(double p) { return uniform() < p; }

    // Inclusive range; rejection sampling keeps it unbiased.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<std::int64_t>(engine_());
        const auto limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
        std::uint64_t draw;
        do draw = engine_();
        while (draw >= limit);
        return lo + static_cast<std::int64_t>(draw % span);
    }

    template <class It>
    void shuffle(It first, It last) {
        const auto n = last - first;
        for (auto i = n - 1; i > 0; --i) std::iter_swap(first + i, first + uniform_int(0, i));
    }

private:
    std::mt19937_64 engine_;
};

} // namespace metacog

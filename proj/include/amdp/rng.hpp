#pragma once

#include <cstdint>
#include <random>

namespace amdp {

/// SplitMix64 finalizer. Used to derive independent child seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) noexcept {
    return mix64(mix64(parent) ^ mix64(stream + 0x632BE59BD9B4E019ULL));
}

/// Seedable random stream owned by one run (or one agent within a run).
///
/// Wraps std::mt19937_64, whose output sequence is fixed by the standard, and
/// converts to doubles by bit manipulation so that draws are bit-identical
/// across standard library implementations.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }

    result_type operator()() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1]; never returns 0, so -log(u) is finite.
    double uniform_positive() { return 1.0 - uniform(); }

    /// Independent child stream. Depends only on the construction seed and
    /// the stream id, not on how many draws this stream has made.
    Rng split(std::uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace amdp

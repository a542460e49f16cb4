#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace selftrain {

// All randomness in the library flows through this generator. The standard
// <random> distributions are implementation-defined, so we keep our own
// xoshiro256++ engine plus fixed draw algorithms: identical seeds give
// bit-identical streams under any standard library.

std::uint64_t splitmix64(std::uint64_t& state);

/// Collapse an arbitrary list of seed components into one 64-bit seed.
/// Used to derive per-iteration / per-member seeds from a run seed.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts);

class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform integer in [0, bound), unbiased via rejection. bound > 0.
    std::uint64_t below(std::uint64_t bound);

    /// Uniform double in [0, 1) with 53 bits of precision.
    double uniform01();

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi);

    /// Standard normal deviate (Box-Muller, spare cached).
    double normal();

    /// Bernoulli draw with success probability prob.
    bool bernoulli(double prob);

    /// Fisher-Yates shuffle, deterministic for a fixed stream position.
    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    std::array<std::uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace selftrain

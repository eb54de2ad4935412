#ifndef ADAPTEST_RNG_HPP
#define ADAPTEST_RNG_HPP

#include <array>
#include <cstdint>

namespace adaptest {

// SplitMix64 step; used for seeding and for deriving per-replication streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/**
 * Deterministic PRNG (xoshiro256++) with a portable uniform-double mapping.
 *
 * The standard <random> distributions are implementation-defined, so every
 * draw here goes through this class to keep transcripts byte-identical
 * across compilers and thread counts.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0x853C49E6748FEA9BULL) : seed_(seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    // Stream for replication `index` derived from a master seed. Streams are
    // independent of thread scheduling.
    static Rng derive(std::uint64_t master_seed, std::uint64_t index) {
        std::uint64_t sm = master_seed;
        std::uint64_t base = splitmix64(sm);
        return Rng(base ^ (0x9E3779B97F4A7C15ULL * (index + 1)));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform double in [0, 1), 53 random bits.
    double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return u01() < p; }

    std::uint64_t seed() const { return seed_; }
    const std::array<std::uint64_t, 4>& state() const { return state_; }
    void set_state(const std::array<std::uint64_t, 4>& s) { state_ = s; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t seed_;
    std::array<std::uint64_t, 4> state_{};
};

}  // namespace adaptest

#endif  // ADAPTEST_RNG_HPP

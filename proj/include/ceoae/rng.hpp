#ifndef CEOAE_RNG_HPP
#define CEOAE_RNG_HPP

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace ceoae {

/// Philox4x32-10 block function: maps (counter, key) to four 32-bit words.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// SplitMix64 finalizer, used to derive stream identifiers.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Counter-based generator. A (seed, stream) pair names an independent,
/// platform-independent sequence; any number of streams can be derived
/// without shared state.
class CounterRng {
public:
    using result_type = std::uint32_t;

    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

    /// Stream id derived from a path of indices, e.g. {n, realization, purpose}.
    static std::uint64_t stream_id(std::initializer_list<std::uint64_t> path) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;
    std::uint64_t next_u64() noexcept;

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept;
    /// Uniform integer in [0, bound); bound > 0.
    std::uint64_t uniform_index(std::uint64_t bound) noexcept;
    /// Standard normal via Box-Muller.
    double normal() noexcept;
    double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }

private:
    void refill() noexcept;

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    unsigned used_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace ceoae

#endif

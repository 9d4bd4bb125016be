#pragma once

#include <array>
#include <cstdint>

namespace thrlasso {

/// splitmix64 finalizer; used to derive stream keys.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/**
 * Philox4x32-10 counter-based generator (Salmon et al. 2011, Random123).
 *
 * The 64-bit key selects the stream and a 128-bit counter indexes blocks within it.
 * Output is a pure function of (key, counter), so streams are reproducible
 * bit for bit on any platform and independent of thread scheduling.
 */
class Philox4x32 {
public:
    using Block = std::array<std::uint32_t, 4>;

    explicit Philox4x32(std::uint64_t key) noexcept;

    static Block bijection(Block counter, std::array<std::uint32_t, 2> key) noexcept;

    std::uint64_t next_u64() noexcept;
    /// Uniform on the open interval (0, 1): ((bits >> 11) + 0.5) * 2^-53.
    double uniform() noexcept;
    /// Standard normal by the AS241 inverse CDF applied to uniform().
    double normal() noexcept;

private:
    void refill() noexcept;

    std::array<std::uint32_t, 2> key_;
    std::uint64_t counter_ = 0;
    Block buffer_{};
    int used_ = 4;
};

enum class StreamPurpose : std::uint64_t { Design = 1, Noise = 2, Eval = 3 };

/// Key = splitmix64(splitmix64(splitmix64(seed) ^ index) ^ purpose).
Philox4x32 make_stream(std::uint64_t seed, std::uint64_t index, StreamPurpose purpose) noexcept;

/// Wichura (1988) AS241 PPND16: the standard normal quantile, about 1e-16 relative accuracy.
/// Requires 0 < p < 1.
double normal_quantile(double p);

}  // namespace thrlasso

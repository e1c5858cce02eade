#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace featkd {

/// Deterministic 64-bit random stream.
///
/// The generator is splitmix64: the state advances by a fixed odd constant and
/// each output is a finalizer hash of the state, so the stream is effectively
/// counter-based. Equal seeds give equal sequences on every platform (the
/// integer stream is bit-exact; Gaussian draws additionally depend on libm's
/// log/sqrt/sin/cos, which are stable for a given toolchain).
///
/// Substreams are derived from the root seed by key hashing, independent of
/// how many draws the parent has made. One stream per logical consumer is the
/// intended usage; streams are cheap value types.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : root_(seed), state_(seed) {}

    std::uint64_t seed() const { return root_; }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix(state_);
    }

    /// Uniform double in [0, 1), 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Normal(mean, std^2) via Box-Muller with a cached spare.
    double next_gaussian(double mean, double std) {
        if (std < 0.0) {
            throw std::invalid_argument("next_gaussian: std must be >= 0");
        }
        if (has_spare_) {
            has_spare_ = false;
            return mean + std * spare_;
        }
        // u1 in (0, 1] so log(u1) is finite.
        const double u1 = 1.0 - next_double();
        const double u2 = next_double();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return mean + std * (radius * std::cos(angle));
    }

    /// Uniform integer in [0, bound) by rejection, bias-free.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0) {
            throw std::invalid_argument("next_below: bound must be positive");
        }
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t raw = next_u64();
        while (raw >= limit) {
            raw = next_u64();
        }
        return raw % bound;
    }

    /// Independent stream derived from the root seed and a caller-chosen key.
    /// The derivation hashes (root, key) and does not consume from this stream.
    RngStream substream(std::uint64_t key) const {
        return RngStream(mix(root_ ^ (key * 0xD2B74407B1CE6E93ull + 0x9E3779B97F4A7C15ull)));
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t root_;
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace featkd

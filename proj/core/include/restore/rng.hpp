#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "restore/image.hpp"

namespace restore {

/// Role of a random stream within one experiment run. Streams are keyed by
/// (master_seed, seed_index, role) so they never alias each other.
enum class StreamRole : std::uint64_t {
    ground_truth = 1,
    noise = 2,
    sampler = 3,
    kernel = 4,
    mask = 5,
};

/// Small counter-based generator (splitmix64 stream over a hashed key).
/// The draw algorithm is frozen here on purpose: sampler outputs must be
/// reproducible bit-for-bit for a given seed, independent of platform library
/// choices. Normals use one Box-Muller evaluation per value (two uniforms
/// each, no cached spare), so the stream position depends only on how many
/// values have been drawn.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    Rng(std::uint64_t master_seed, std::uint64_t seed_index, StreamRole role)
        : state_(mix(mix(mix(0x9e3779b97f4a7c15ULL ^ master_seed) ^ seed_index) ^
                     static_cast<std::uint64_t>(role))) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    /// Uniform in (0, 1].
    double next_unit() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    double next_normal() {
        const double u1 = next_unit();
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    void fill_normal(ImageGrid& g) {
        for (double& v : g.data) v = next_normal();
    }

    ImageGrid normal_grid(const Dims& d) {
        ImageGrid g(d.height, d.width, d.channels);
        fill_normal(g);
        return g;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace restore

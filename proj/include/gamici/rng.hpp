#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace gamici {

/// Seeded generator whose output is identical on every standard library:
/// mt19937_64 and seed_seq are fully specified, and the [0,1) mapping is done
/// here rather than through a distribution object.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    /// Uniform double in [0, 1) with 53 bits of precision.
    double draw();

    /// Uniform index in [0, n). n must be positive.
    std::size_t index(std::size_t n);

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace gamici

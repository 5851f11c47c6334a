#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace mfbf {

/// splitmix64 finaliser; used to derive independent per-episode seeds.
std::uint64_t mix_seed(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b);

/// Thin wrapper over mt19937_64 with bit-reproducible draws (the standard
/// distributions are implementation-defined, these are not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform on {0, ..., n-1}; n > 0.
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

private:
    std::mt19937_64 engine_;
};

/// Runs body(i) for i in [0, n) on up to `jobs` threads. Work items must write
/// to disjoint, index-addressed outputs so results do not depend on `jobs`.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& body);

} // namespace mfbf

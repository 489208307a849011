#pragma once

#include <cstdint>
#include <random>

namespace stin {

/// Deterministic random stream. mt19937_64 has a standardized sequence and
/// the uniform/normal mappings below are written out explicitly, so identical
/// seeds give bit-identical draws on every platform (std::*_distribution does
/// not guarantee that).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller.
    double normal();

    std::uint64_t raw() { return engine_(); }

  private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

/// Derives an independent child seed from (master, index). splitmix64 finalizer.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

} // namespace stin

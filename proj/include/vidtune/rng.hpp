#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace vidtune {

// Deterministic random source. All distributions are implemented here rather
// than with <random>'s distribution templates so that streams are
// bit-reproducible across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform on [low, high).
    double uniform(double low, double high) {
        double v = low + uniform() * (high - low);
        if (v >= high) v = std::nextafter(high, low);
        return v;
    }

    // Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_int(std::uint64_t n);

    // Standard normal via Box-Muller (two uniforms per draw).
    double gaussian();

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    // Derives an independent stream seed from (seed, stream). Used so that a
    // pipeline step's stream does not depend on the draws of earlier steps.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

private:
    std::mt19937_64 engine_;
};

}  // namespace vidtune

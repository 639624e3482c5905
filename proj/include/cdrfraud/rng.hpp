#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace cdrfraud {

/// Seeded pseudorandom stream. Uses the raw mt19937_64 output directly rather
/// than <random> distributions, whose algorithms differ between standard
/// libraries; draws are therefore identical on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Independent stream for sub-task `stream` of a run seeded with `seed`.
    static Rng derive(std::uint64_t seed, std::uint64_t stream) {
        return Rng(splitmix64(seed ^ splitmix64(stream + 0x9e3779b97f4a7c15ULL)));
    }

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1].
    double uniform01() {
        return static_cast<double>(next() >> 11) * (1.0 / 9007199254740991.0);
    }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_index(std::uint64_t n) {
        // Rejection keeps the draw unbiased for any n.
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x = next();
        while (x >= limit) x = next();
        return x % n;
    }

    template <typename T>
    void shuffle(std::span<T> values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_index(i));
            std::swap(values[i - 1], values[j]);
        }
    }

    static std::uint64_t splitmix64(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace cdrfraud

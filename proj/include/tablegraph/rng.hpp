#pragma once

#include <cstdint>
#include <vector>

namespace tablegraph {

// splitmix64 finalizer; the basis of every random decision in the project.
// All generation must go through Rng so that suites are byte-identical
// across platforms (std::uniform_int_distribution is not portable).
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Derives an independent per-scenario seed from a master seed. Streams keep
/// categories independent so a suite can grow without reshuffling earlier
/// scenarios.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
    std::uint64_t h = mix64(master ^ (0xD1B54A32D192ED03ULL * (stream + 1)));
    return mix64(h ^ (0x8CB92BA72F3D8DD7ULL * (index + 1)));
}

/// Deterministic splitmix64 generator.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform-ish integer in [0, n). Modulo bias is irrelevant at these sizes.
    std::uint32_t below(std::uint32_t n) {
        return n == 0 ? 0 : static_cast<std::uint32_t>(next() % n);
    }

    bool chance(std::uint32_t percent) { return below(100) < percent; }

    template <typename T>
    const T& pick(const std::vector<T>& items) {
        return items[below(static_cast<std::uint32_t>(items.size()))];
    }

    /// In-place Fisher-Yates; hand-rolled because std::shuffle is not
    /// bit-reproducible across standard libraries.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = below(static_cast<std::uint32_t>(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t state_;
};

} // namespace tablegraph

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "lars/tensor.hpp"

namespace lars {

// Seeded generator. Built on std::mt19937_64, whose output sequence is fixed
// by the standard; the distributions are implemented here rather than taken
// from <random> because the standard leaves those implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return engine_(); }
    // Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform integer in [0, n).
    std::size_t uniform_index(std::size_t n);
    double normal(double mean = 0.0, double std = 1.0);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(i)]);
    }

    // Independent stream derived from this generator's seed and a tag.
    Rng fork(std::uint64_t tag) const;

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

Tensor gaussian(Rng& rng, const Shape& shape, double mean, double std);
Tensor uniform(Rng& rng, const Shape& shape, double lo, double hi);

}  // namespace lars

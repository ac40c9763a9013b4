#include "lars/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace lars {

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::size_t Rng::uniform_index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: empty range");
    const std::uint64_t bound = n;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return static_cast<std::size_t>(x % bound);
}

double Rng::normal(double mean, double std) {
    if (spare_) {
        const double z = *spare_;
        spare_.reset();
        return mean + std * z;
    }
    // Box-Muller; 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    return mean + std * (r * std::cos(theta));
}

Rng Rng::fork(std::uint64_t tag) const {
    // splitmix64 finalizer over (seed, tag)
    std::uint64_t z = seed_ + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return Rng(z ^ (z >> 31));
}

Tensor gaussian(Rng& rng, const Shape& shape, double mean, double std) {
    if (!(std >= 0.0)) throw std::invalid_argument("gaussian: std must be non-negative");
    Tensor t(shape);
    for (double& v : t.data()) v = rng.normal(mean, std);
    return t;
}

Tensor uniform(Rng& rng, const Shape& shape, double lo, double hi) {
    Tensor t(shape);
    for (double& v : t.data()) v = rng.uniform(lo, hi);
    return t;
}

}  // namespace lars

#include "thermotwin/core/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "thermotwin/core/errors.hpp"

namespace thermotwin {

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::string label)
    : seed_(seed), label_(std::move(label)), engine_(splitmix64(seed ^ fnv1a64(label_))) {}

RngStream RngStream::substream(std::string_view name) const {
    return RngStream(seed_, label_ + "/" + std::string(name));
}

double RngStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double RngStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

std::size_t RngStream::uniform_index(std::size_t n) {
    require(n > 0, ErrorKind::parameter, "uniform_index: n must be positive");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return static_cast<std::size_t>(x % bound);
}

std::vector<std::size_t> RngStream::sample_without_replacement(std::size_t n, std::size_t k) {
    require(k <= n, ErrorKind::parameter, "sample_without_replacement: k > n");
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + uniform_index(n - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

std::vector<std::size_t> RngStream::permutation(std::size_t n) { return sample_without_replacement(n, n); }

}  // namespace thermotwin

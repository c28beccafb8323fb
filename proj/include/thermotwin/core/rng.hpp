#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace thermotwin {

/// FNV-1a, 64-bit.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Named deterministic random stream.
///
/// The engine is `std::mt19937_64`, whose output sequence is fixed by the C++
/// standard, seeded from splitmix64(seed ^ fnv1a64(label)). Uniform and normal
/// variates are derived here rather than through `<random>` distributions,
/// whose algorithms are implementation-defined.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::string label);

    std::uint64_t seed() const noexcept { return seed_; }
    const std::string& label() const noexcept { return label_; }

    /// Independent stream labelled "<label>/<name>" with the same seed.
    RngStream substream(std::string_view name) const;

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Standard normal (Box-Muller, cached pair).
    double normal();
    /// Uniform integer in [0, n), unbiased.
    std::size_t uniform_index(std::size_t n);
    /// `k` distinct indices from [0, n) in draw order (partial Fisher-Yates).
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);
    /// Random permutation of [0, n).
    std::vector<std::size_t> permutation(std::size_t n);

private:
    std::uint64_t seed_;
    std::string label_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace thermotwin

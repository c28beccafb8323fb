#pragma once

#include <cstdint>
#include <vector>

namespace thermotwin {

/// Unscrambled base-2 Sobol sequence (Joe-Kuo direction numbers, 32-bit).
/// Point 0 is the origin; point i is the Gray-code ordered value, so the
/// sequence matches the usual incremental construction.
class Sobol {
public:
    static constexpr std::size_t max_dims = 40;
    static constexpr int bits = 32;

    explicit Sobol(std::size_t dims);

    std::size_t dims() const noexcept { return dims_; }
    /// Point with the given index, each coordinate in [0, 1).
    std::vector<double> point(std::uint64_t index) const;

private:
    std::size_t dims_;
    std::vector<std::uint32_t> v_;  // dims x bits direction numbers
};

}  // namespace thermotwin

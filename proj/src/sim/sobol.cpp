#include "thermotwin/sim/sobol.hpp"

#include <bit>
#include <string>

#include "thermotwin/core/errors.hpp"

namespace thermotwin {

namespace {

struct Primitive {
    std::uint32_t poly;  // including the leading and trailing 1 bits
    std::vector<std::uint32_t> m;
};

// Joe & Kuo (2008), new-joe-kuo-6.21201, dimensions 2..40.
const Primitive table[] = {
    {3, {1}},
    {7, {1, 3}},
    {11, {1, 3, 1}},
    {13, {1, 1, 1}},
    {19, {1, 1, 3, 3}},
    {25, {1, 3, 5, 13}},
    {37, {1, 1, 5, 5, 17}},
    {41, {1, 1, 5, 5, 5}},
    {47, {1, 1, 7, 11, 19}},
    {55, {1, 1, 5, 1, 1}},
    {59, {1, 1, 1, 3, 11}},
    {61, {1, 3, 5, 5, 31}},
    {67, {1, 3, 3, 9, 7, 49}},
    {91, {1, 1, 1, 15, 21, 21}},
    {97, {1, 3, 1, 13, 27, 49}},
    {103, {1, 1, 1, 15, 7, 5}},
    {109, {1, 3, 1, 15, 13, 25}},
    {115, {1, 1, 5, 5, 19, 61}},
    {131, {1, 3, 7, 11, 23, 15, 103}},
    {137, {1, 3, 7, 13, 13, 15, 69}},
    {143, {1, 1, 3, 13, 7, 35, 63}},
    {145, {1, 3, 5, 9, 1, 25, 53}},
    {157, {1, 3, 1, 13, 9, 35, 107}},
    {167, {1, 3, 1, 5, 27, 61, 31}},
    {171, {1, 1, 5, 11, 19, 41, 61}},
    {185, {1, 3, 5, 3, 3, 13, 69}},
    {191, {1, 1, 7, 13, 1, 19, 1}},
    {193, {1, 3, 7, 5, 13, 19, 59}},
    {203, {1, 1, 3, 9, 25, 29, 41}},
    {211, {1, 3, 5, 13, 23, 1, 55}},
    {213, {1, 3, 7, 3, 13, 59, 17}},
    {229, {1, 3, 1, 3, 5, 53, 69}},
    {239, {1, 1, 5, 5, 23, 33, 13}},
    {241, {1, 1, 7, 7, 1, 61, 123}},
    {247, {1, 1, 7, 9, 13, 61, 49}},
    {253, {1, 3, 3, 5, 3, 55, 33}},
    {285, {1, 3, 1, 15, 31, 13, 49, 245}},
    {299, {1, 3, 5, 15, 31, 59, 63, 97}},
    {301, {1, 3, 1, 11, 11, 11, 77, 249}},
};

}  // namespace

Sobol::Sobol(std::size_t dims) : dims_(dims), v_(dims * bits) {
    require(dims >= 1 && dims <= max_dims, ErrorKind::parameter,
            "Sobol dimension must be in [1, " + std::to_string(max_dims) + "]");
    for (int k = 0; k < bits; ++k) v_[static_cast<std::size_t>(k)] = 1u << (bits - 1 - k);

    for (std::size_t d = 1; d < dims; ++d) {
        const auto& p = table[d - 1];
        const int s = std::bit_width(p.poly) - 1;
        std::vector<std::uint32_t> m(bits);
        for (int k = 0; k < s; ++k) m[static_cast<std::size_t>(k)] = p.m[static_cast<std::size_t>(k)];
        for (int k = s; k < bits; ++k) {
            std::uint32_t mk = m[static_cast<std::size_t>(k - s)] ^ (m[static_cast<std::size_t>(k - s)] << s);
            for (int j = 1; j < s; ++j) {
                if ((p.poly >> (s - j)) & 1u) mk ^= m[static_cast<std::size_t>(k - j)] << j;
            }
            m[static_cast<std::size_t>(k)] = mk;
        }
        for (int k = 0; k < bits; ++k) {
            v_[d * bits + static_cast<std::size_t>(k)] = m[static_cast<std::size_t>(k)] << (bits - 1 - k);
        }
    }
}

std::vector<double> Sobol::point(std::uint64_t index) const {
    require(index < (std::uint64_t{1} << bits), ErrorKind::parameter, "Sobol index exceeds 2^32 - 1");
    const std::uint64_t gray = index ^ (index >> 1);
    std::vector<double> x(dims_);
    for (std::size_t d = 0; d < dims_; ++d) {
        std::uint32_t acc = 0;
        for (int k = 0; k < bits; ++k) {
            if ((gray >> k) & 1u) acc ^= v_[d * bits + static_cast<std::size_t>(k)];
        }
        x[d] = static_cast<double>(acc) * 0x1.0p-32;
    }
    return x;
}

}  // namespace thermotwin

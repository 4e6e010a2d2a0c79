#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace chdrl {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent seeds for streams.
inline std::uint64_t mix_seed(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index = 0)
{
    return mix_seed(mix_seed(mix_seed(base) ^ stream) ^ index);
}

template <typename Scalar = double>
Scalar draw_normal(Rng& rng)
{
    std::normal_distribution<Scalar> dist(Scalar(0), Scalar(1));
    return dist(rng);
}

template <typename Scalar = double>
Scalar draw_uniform(Rng& rng, Scalar low, Scalar high)
{
    std::uniform_real_distribution<Scalar> dist(low, high);
    return dist(rng);
}

template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> standard_normal(Rng& rng, Eigen::Index rows, Eigen::Index cols)
{
    std::normal_distribution<Scalar> dist(Scalar(0), Scalar(1));
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(rows, cols);
    // Fill column by column so the draw order does not depend on storage order.
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r)
            out(r, c) = dist(rng);
    return out;
}

inline bool draw_bernoulli(Rng& rng, double p)
{
    if (p <= 0.0)
        return false;
    if (p >= 1.0)
        return true;
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    return dist(rng) < p;
}

inline std::size_t draw_index(Rng& rng, std::size_t n)
{
    std::uniform_int_distribution<std::size_t> dist(0, n - 1);
    return dist(rng);
}

} // namespace chdrl

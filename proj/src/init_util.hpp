#pragma once

#include "motiondiff/core.hpp"

#include <cmath>
#include <random>

namespace motiondiff::detail {

// Gaussian weights with std = gain / sqrt(fan_in).
inline Matrix normal_weight(Eigen::Index fan_in, Eigen::Index fan_out, std::mt19937_64& rng, double gain = 1.0) {
    std::normal_distribution<double> normal(0.0, gain / std::sqrt(static_cast<double>(fan_in)));
    Matrix m(fan_in, fan_out);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = normal(rng);
    return m;
}

inline Matrix zeros(Eigen::Index rows, Eigen::Index cols) { return Matrix::Zero(rows, cols); }
inline Matrix ones(Eigen::Index rows, Eigen::Index cols) { return Matrix::Ones(rows, cols); }

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Standard normal draws that depend only on the integer state, independent
// of the standard library's distribution implementation.
inline double portable_normal(std::uint64_t& state) {
    constexpr double kTwoPi = 6.283185307179586476925;
    const double u1 = (static_cast<double>(splitmix64(state) >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = (static_cast<double>(splitmix64(state) >> 11) + 0.5) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

// Sinusoidal code of a scalar position over `width` columns.
inline RowVector sinusoid(double position, Eigen::Index width) {
    RowVector out = RowVector::Zero(width);
    const Eigen::Index half = width / 2;
    for (Eigen::Index i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
        out(2 * i) = std::sin(position * freq);
        out(2 * i + 1) = std::cos(position * freq);
    }
    return out;
}

}  // namespace motiondiff::detail

#pragma once
// Shared synthetic inputs for the test suites.

#include "turbrest/core.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace fixtures {

using turbrest::Frame;
using turbrest::FrameStack;

/// Piecewise-smooth scene: a checkerboard of 16-pixel blocks, a smooth ripple and a dark disk.
inline Frame scene(Eigen::Index rows = 64, Eigen::Index cols = 64)
{
    Frame f(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            double v = 0.5 + 0.2 * std::sin(0.35 * static_cast<double>(i)) * std::cos(0.22 * static_cast<double>(j));
            if (((i / 16) + (j / 16)) % 2 != 0) v += 0.2;
            const double di = static_cast<double>(i) - 0.625 * static_cast<double>(rows);
            const double dj = static_cast<double>(j) - 0.375 * static_cast<double>(cols);
            if (di * di + dj * dj < 100.0) v = 0.1;
            f(i, j) = std::clamp(v, 0.0, 1.0);
        }
    }
    return f;
}

inline Frame uniform_frame(std::mt19937_64& rng, Eigen::Index r, Eigen::Index s, double lo = 0.0, double hi = 1.0)
{
    std::uniform_real_distribution<double> u(lo, hi);
    Frame f(r, s);
    for (Eigen::Index j = 0; j < s; ++j)
        for (Eigen::Index i = 0; i < r; ++i) f(i, j) = u(rng);
    return f;
}

inline FrameStack random_stack(std::mt19937_64& rng, std::size_t n, Eigen::Index r, Eigen::Index s)
{
    std::vector<Frame> frames;
    for (std::size_t k = 0; k < n; ++k) frames.push_back(uniform_frame(rng, r, s));
    return FrameStack(std::move(frames));
}

inline FrameStack repeated(const Frame& f, std::size_t n) { return FrameStack(std::vector<Frame>(n, f)); }

}  // namespace fixtures

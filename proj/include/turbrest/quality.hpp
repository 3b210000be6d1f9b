#pragma once
// Per-frame quality measures: the normalized Laplacian sharpness score and
// total variation, plus the forward-difference operators they share with the
// TV solver. All stencils use replicate (Neumann) boundaries.

#include "turbrest/core.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <vector>

namespace turbrest {

enum class TvVariant { Aniso, Iso };

/// Horizontal forward difference I(i,j+1) - I(i,j); zero in the last column.
inline Frame grad_x(const Frame& f)
{
    Frame g = Frame::Zero(f.rows(), f.cols());
    if (f.cols() > 1) {
        g.leftCols(f.cols() - 1) = f.rightCols(f.cols() - 1) - f.leftCols(f.cols() - 1);
    }
    return g;
}

/// Vertical forward difference I(i+1,j) - I(i,j); zero in the last row.
inline Frame grad_y(const Frame& f)
{
    Frame g = Frame::Zero(f.rows(), f.cols());
    if (f.rows() > 1) {
        g.topRows(f.rows() - 1) = f.bottomRows(f.rows() - 1) - f.topRows(f.rows() - 1);
    }
    return g;
}

/// Adjoint of grad_x. The last column of `p` is ignored, matching the zero row of the operator.
inline Frame grad_x_adjoint(const Frame& p)
{
    const Eigen::Index s = p.cols();
    Frame out = Frame::Zero(p.rows(), s);
    if (s > 1) {
        out.leftCols(s - 1) -= p.leftCols(s - 1);
        out.rightCols(s - 1) += p.leftCols(s - 1);
    }
    return out;
}

inline Frame grad_y_adjoint(const Frame& p)
{
    const Eigen::Index r = p.rows();
    Frame out = Frame::Zero(r, p.cols());
    if (r > 1) {
        out.topRows(r - 1) -= p.topRows(r - 1);
        out.bottomRows(r - 1) += p.topRows(r - 1);
    }
    return out;
}

/// 5-point Laplacian [[0,1,0],[1,-4,1],[0,1,0]] with replicated borders.
inline Frame laplacian(const Frame& f)
{
    const Eigen::Index r = f.rows();
    const Eigen::Index s = f.cols();
    Frame out(r, s);
    for (Eigen::Index j = 0; j < s; ++j) {
        const Eigen::Index jl = j > 0 ? j - 1 : 0;
        const Eigen::Index jr = j + 1 < s ? j + 1 : s - 1;
        for (Eigen::Index i = 0; i < r; ++i) {
            const Eigen::Index iu = i > 0 ? i - 1 : 0;
            const Eigen::Index id = i + 1 < r ? i + 1 : r - 1;
            out(i, j) = f(iu, j) + f(id, j) + f(i, jl) + f(i, jr) - 4.0 * f(i, j);
        }
    }
    return out;
}

/// ||Laplacian(I)||_1 summed over pixels.
inline double laplacian_l1(const Frame& f) { return laplacian(f).cwiseAbs().sum(); }

struct QualityVector {
    std::vector<double> values;
    /// All raw scores were equal, so every frame scored 0.
    bool degenerate = false;

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] double operator[](std::size_t k) const { return values[k]; }
};

/**
 * Maps raw sharpness scores affinely onto [0,1] so that the sharpest frame
 * (largest raw score) gets 0 and the blurriest gets 1. When every raw score is
 * equal the map is undefined; all frames then score 0 and a warning is logged.
 */
inline QualityVector normalize_sharpness(const std::vector<double>& raw)
{
    if (raw.empty()) {
        throw Error("normalize_sharpness needs at least one value");
    }
    const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
    const double span = *hi - *lo;
    QualityVector q;
    q.values.assign(raw.size(), 0.0);
    if (!(span > 0.0)) {
        q.degenerate = true;
        std::clog << "turbrest: warning: all frames have equal sharpness; quality measure set to 0\n";
        return q;
    }
    for (std::size_t k = 0; k < raw.size(); ++k) {
        q.values[k] = (*hi - raw[k]) / span;
    }
    return q;
}

/// Normalized Laplacian quality of every frame of a stack.
inline QualityVector sharpness_quality(const FrameStack& stack)
{
    std::vector<double> raw;
    raw.reserve(stack.size());
    for (const auto& f : stack) {
        raw.push_back(laplacian_l1(f));
    }
    return normalize_sharpness(raw);
}

inline double tv_value(const Frame& f, TvVariant variant)
{
    const Frame gx = grad_x(f);
    const Frame gy = grad_y(f);
    if (variant == TvVariant::Aniso) {
        return gx.cwiseAbs().sum() + gy.cwiseAbs().sum();
    }
    return (gx.array().square() + gy.array().square()).sqrt().sum();
}

/// Raw (unnormalized) TV of every frame.
inline QualityVector tv_quality(const FrameStack& stack, TvVariant variant)
{
    QualityVector q;
    q.values.reserve(stack.size());
    for (const auto& f : stack) {
        q.values.push_back(tv_value(f, variant));
    }
    return q;
}

}  // namespace turbrest

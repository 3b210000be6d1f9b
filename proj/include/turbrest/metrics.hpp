#pragma once
// PSNR and single-scale SSIM for frames with intensities in [0,1] (peak 1.0).

#include "turbrest/core.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace turbrest {

struct MetricReport {
    double psnr_db = 0.0;  ///< +infinity for identical frames
    double ssim = 0.0;
    double elapsed_seconds = 0.0;
};

inline void require_same_shape(const Frame& a, const Frame& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw Error("dimension mismatch: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                    std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    }
}

inline double psnr(const Frame& a, const Frame& b)
{
    require_same_shape(a, b);
    const double mse = (a - b).squaredNorm() / static_cast<double>(a.size());
    if (mse == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(1.0 / mse);
}

namespace detail {

inline constexpr int kSsimWindow = 11;

inline std::array<double, kSsimWindow> ssim_kernel_1d()
{
    constexpr double sigma = 1.5;
    std::array<double, kSsimWindow> k{};
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - kSsimWindow / 2;
        k[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += k[static_cast<std::size_t>(i)];
    }
    for (auto& v : k) {
        v /= sum;
    }
    return k;
}

/// Separable Gaussian filter evaluated only where the window fits inside the frame.
inline Matrix filter_valid(const Matrix& img, const std::array<double, kSsimWindow>& k)
{
    const Eigen::Index r = img.rows() - kSsimWindow + 1;
    const Eigen::Index s = img.cols() - kSsimWindow + 1;
    Matrix tmp = Matrix::Zero(r, img.cols());
    for (int t = 0; t < kSsimWindow; ++t) {
        tmp += k[static_cast<std::size_t>(t)] * img.middleRows(t, r);
    }
    Matrix out = Matrix::Zero(r, s);
    for (int t = 0; t < kSsimWindow; ++t) {
        out += k[static_cast<std::size_t>(t)] * tmp.middleCols(t, s);
    }
    return out;
}

}  // namespace detail

/**
 * Mean SSIM over every position where the 11x11 Gaussian window (sigma 1.5)
 * fits, with K1 = 0.01, K2 = 0.03 and dynamic range 1. Frames smaller than the
 * window are rejected.
 */
inline double ssim(const Frame& a, const Frame& b)
{
    require_same_shape(a, b);
    if (a.rows() < detail::kSsimWindow || a.cols() < detail::kSsimWindow) {
        throw Error("ssim needs frames of at least 11x11 pixels");
    }
    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;
    const auto k = detail::ssim_kernel_1d();
    const Matrix mu_a = detail::filter_valid(a, k);
    const Matrix mu_b = detail::filter_valid(b, k);
    const Matrix aa = detail::filter_valid(a.cwiseProduct(a), k);
    const Matrix bb = detail::filter_valid(b.cwiseProduct(b), k);
    const Matrix ab = detail::filter_valid(a.cwiseProduct(b), k);

    const auto ma = mu_a.array();
    const auto mb = mu_b.array();
    const auto var_a = aa.array() - ma.square();
    const auto var_b = bb.array() - mb.square();
    const auto cov = ab.array() - ma * mb;
    const auto map = ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma.square() + mb.square() + c1) * (var_a + var_b + c2));
    return map.mean();
}

}  // namespace turbrest

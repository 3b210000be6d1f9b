#pragma once
/**
 * @file simulator.hpp
 * @brief Synthetic turbulence-degraded sequences from a single sharp image.
 *
 * Each frame gets a random displacement field built from overlapping patches:
 * floor(rows*cols / divisor) patch centers are drawn uniformly, each patch
 * carries one standard-normal 2-vector weighted by a peak-normalized Gaussian
 * whose mean is jittered around the patch center, and overlapping patches add.
 * The truth is backward-warped by the field, blurred by a Gaussian and
 * optionally corrupted by additive Gaussian noise.
 */

#include "turbrest/core.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace turbrest {

struct TurbulenceConfig {
    std::size_t n_frames = 100;
    double severe_fraction = 0.7;
    std::array<double, 2> severe_strength{1.0, 1.5};
    std::array<double, 2> mild_strength{0.2, 0.3};
    int patch_size = 65;
    int patch_density_divisor = 250;
    std::optional<double> patch_sigma;  ///< patch_size / 6 when unset
    double center_jitter = 2.0;         ///< Gaussian mean offset drawn uniformly from [-j, j] per axis
    double blur_sigma = 1.0;
    double noise_sigma = 0.0;                ///< severe frames; 0 disables
    std::optional<double> mild_noise_sigma;  ///< mild frames; noise_sigma when unset
    std::uint64_t seed = 0;

    [[nodiscard]] double effective_patch_sigma() const { return patch_sigma.value_or(patch_size / 6.0); }
    [[nodiscard]] double effective_mild_noise() const { return mild_noise_sigma.value_or(noise_sigma); }
    [[nodiscard]] std::size_t severe_count() const
    {
        return static_cast<std::size_t>(std::floor(severe_fraction * static_cast<double>(n_frames) + 1e-9));
    }

    void validate() const
    {
        auto range_ok = [](const std::array<double, 2>& r) { return r[0] >= 0.0 && r[0] <= r[1] && std::isfinite(r[1]); };
        if (n_frames < 1) throw Error("n_frames must be at least 1");
        if (!(severe_fraction >= 0.0 && severe_fraction <= 1.0)) throw Error("severe_fraction must lie in [0,1]");
        if (!range_ok(severe_strength)) throw Error("severe strength range must satisfy 0 <= lo <= hi");
        if (!range_ok(mild_strength)) throw Error("mild strength range must satisfy 0 <= lo <= hi");
        if (patch_size < 3 || patch_size % 2 == 0) throw Error("patch_size must be odd and at least 3");
        if (patch_density_divisor < 1) throw Error("patch_density_divisor must be positive");
        if (patch_sigma && !(*patch_sigma > 0.0)) throw Error("patch_sigma must be positive");
        if (!(center_jitter >= 0.0)) throw Error("center_jitter must be nonnegative");
        if (!(blur_sigma >= 0.0)) throw Error("blur_sigma must be nonnegative");
        if (!(noise_sigma >= 0.0)) throw Error("noise_sigma must be nonnegative");
        if (mild_noise_sigma && !(*mild_noise_sigma >= 0.0)) throw Error("mild_noise_sigma must be nonnegative");
    }

    /// Two noise levels: `severe_fraction` of the frames get `noisy`, the rest `clean`.
    static TurbulenceConfig noisy_preset(double noisy = 0.05, double clean = 0.01)
    {
        TurbulenceConfig c;
        c.noise_sigma = noisy;
        c.mild_noise_sigma = clean;
        return c;
    }
};

namespace detail {

inline std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& key, const std::string& text)
{
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw Error("config key '" + key + "': '" + text + "' is not a number");
    }
    return v;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& text)
{
    Int v{};
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw Error("config key '" + key + "': '" + text + "' is not an integer");
    }
    return v;
}

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace detail

/// `key = value` lines; ranges are written as `lo,hi`.
inline std::string to_key_value(const TurbulenceConfig& c)
{
    using detail::format_double;
    std::ostringstream os;
    os << "n_frames = " << c.n_frames << '\n'
       << "severe_fraction = " << format_double(c.severe_fraction) << '\n'
       << "severe_strength = " << format_double(c.severe_strength[0]) << ',' << format_double(c.severe_strength[1]) << '\n'
       << "mild_strength = " << format_double(c.mild_strength[0]) << ',' << format_double(c.mild_strength[1]) << '\n'
       << "patch_size = " << c.patch_size << '\n'
       << "patch_density_divisor = " << c.patch_density_divisor << '\n';
    if (c.patch_sigma) os << "patch_sigma = " << format_double(*c.patch_sigma) << '\n';
    os << "center_jitter = " << format_double(c.center_jitter) << '\n'
       << "blur_sigma = " << format_double(c.blur_sigma) << '\n'
       << "noise_sigma = " << format_double(c.noise_sigma) << '\n';
    if (c.mild_noise_sigma) os << "mild_noise_sigma = " << format_double(*c.mild_noise_sigma) << '\n';
    os << "seed = " << c.seed << '\n';
    return os.str();
}

/// Parses the format written by to_key_value. Blank lines and '#' comments are skipped; unset keys keep defaults.
inline TurbulenceConfig turbulence_config_from_key_value(const std::string& text)
{
    TurbulenceConfig c;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        line = detail::trim(line.substr(0, line.find('#')));
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error("config line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        auto range = [&]() {
            const auto comma = val.find(',');
            if (comma == std::string::npos) {
                throw Error("config key '" + key + "' expects lo,hi");
            }
            return std::array<double, 2>{detail::parse_double(key, detail::trim(val.substr(0, comma))),
                                         detail::parse_double(key, detail::trim(val.substr(comma + 1)))};
        };
        if (key == "n_frames") c.n_frames = detail::parse_int<std::size_t>(key, val);
        else if (key == "severe_fraction") c.severe_fraction = detail::parse_double(key, val);
        else if (key == "severe_strength") c.severe_strength = range();
        else if (key == "mild_strength") c.mild_strength = range();
        else if (key == "patch_size") c.patch_size = detail::parse_int<int>(key, val);
        else if (key == "patch_density_divisor") c.patch_density_divisor = detail::parse_int<int>(key, val);
        else if (key == "patch_sigma") c.patch_sigma = detail::parse_double(key, val);
        else if (key == "center_jitter") c.center_jitter = detail::parse_double(key, val);
        else if (key == "blur_sigma") c.blur_sigma = detail::parse_double(key, val);
        else if (key == "noise_sigma") c.noise_sigma = detail::parse_double(key, val);
        else if (key == "mild_noise_sigma") c.mild_noise_sigma = detail::parse_double(key, val);
        else if (key == "seed") c.seed = detail::parse_int<std::uint64_t>(key, val);
        else throw Error("unknown config key '" + key + "'");
    }
    c.validate();
    return c;
}

/// Displacement in pixels: u along columns (x), v along rows (y).
struct MotionField {
    Frame u;
    Frame v;

    static MotionField zero(Eigen::Index rows, Eigen::Index cols)
    {
        return {Frame::Zero(rows, cols), Frame::Zero(rows, cols)};
    }
};

/**
 * Adds strength * vec * exp(-|x - (center + offset)|^2 / (2 sigma^2)) over the
 * patch_size x patch_size window around `center`, cropped at the image border.
 */
inline void add_motion_patch(MotionField& field, Eigen::Index center_row, Eigen::Index center_col,
                             const std::array<double, 2>& vec, double strength, const TurbulenceConfig& config,
                             double offset_row = 0.0, double offset_col = 0.0)
{
    const Eigen::Index half = config.patch_size / 2;
    const double sigma = config.effective_patch_sigma();
    const double inv = 1.0 / (2.0 * sigma * sigma);
    const Eigen::Index r0 = std::max<Eigen::Index>(0, center_row - half);
    const Eigen::Index r1 = std::min<Eigen::Index>(field.u.rows() - 1, center_row + half);
    const Eigen::Index c0 = std::max<Eigen::Index>(0, center_col - half);
    const Eigen::Index c1 = std::min<Eigen::Index>(field.u.cols() - 1, center_col + half);
    const double mr = static_cast<double>(center_row) + offset_row;
    const double mc = static_cast<double>(center_col) + offset_col;
    for (Eigen::Index j = c0; j <= c1; ++j) {
        const double dc = static_cast<double>(j) - mc;
        for (Eigen::Index i = r0; i <= r1; ++i) {
            const double dr = static_cast<double>(i) - mr;
            const double w = strength * std::exp(-(dr * dr + dc * dc) * inv);
            field.u(i, j) += w * vec[0];
            field.v(i, j) += w * vec[1];
        }
    }
}

inline MotionField generate_motion_field(Eigen::Index rows, Eigen::Index cols, double strength,
                                         const TurbulenceConfig& config, std::mt19937_64& rng)
{
    if (!(strength >= 0.0)) {
        throw Error("strength must be nonnegative");
    }
    if (rows < 1 || cols < 1) {
        throw Error("motion field dimensions must be positive");
    }
    MotionField field = MotionField::zero(rows, cols);
    const auto count = static_cast<std::size_t>((rows * cols) / config.patch_density_divisor);
    std::uniform_int_distribution<Eigen::Index> pick_row(0, rows - 1);
    std::uniform_int_distribution<Eigen::Index> pick_col(0, cols - 1);
    std::uniform_real_distribution<double> jitter(-config.center_jitter, config.center_jitter);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t p = 0; p < count; ++p) {
        // Draw order is fixed so a seed always yields the same field.
        const Eigen::Index cr = pick_row(rng);
        const Eigen::Index cc = pick_col(rng);
        const double ux = normal(rng);
        const double vy = normal(rng);
        const double jr = jitter(rng);
        const double jc = jitter(rng);
        if (strength > 0.0) {
            add_motion_patch(field, cr, cc, {ux, vy}, strength, config, jr, jc);
        }
    }
    return field;
}

/// Backward warp: out(i, j) = image(i + v(i, j), j + u(i, j)), bilinear, coordinates clamped to the frame.
inline Frame warp(const Frame& image, const MotionField& field)
{
    if (field.u.rows() != image.rows() || field.u.cols() != image.cols() || field.v.rows() != image.rows() ||
        field.v.cols() != image.cols()) {
        throw Error("motion field does not match the image dimensions");
    }
    const Eigen::Index r = image.rows();
    const Eigen::Index s = image.cols();
    Frame out(r, s);
    for (Eigen::Index j = 0; j < s; ++j) {
        for (Eigen::Index i = 0; i < r; ++i) {
            const double y = std::clamp(static_cast<double>(i) + field.v(i, j), 0.0, static_cast<double>(r - 1));
            const double x = std::clamp(static_cast<double>(j) + field.u(i, j), 0.0, static_cast<double>(s - 1));
            const auto y0 = static_cast<Eigen::Index>(std::floor(y));
            const auto x0 = static_cast<Eigen::Index>(std::floor(x));
            const Eigen::Index y1 = std::min(y0 + 1, r - 1);
            const Eigen::Index x1 = std::min(x0 + 1, s - 1);
            const double fy = y - static_cast<double>(y0);
            const double fx = x - static_cast<double>(x0);
            out(i, j) = (1.0 - fy) * ((1.0 - fx) * image(y0, x0) + fx * image(y0, x1)) +
                        fy * ((1.0 - fx) * image(y1, x0) + fx * image(y1, x1));
        }
    }
    return out;
}

inline std::vector<double> gaussian_kernel(double sigma)
{
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int t = -radius; t <= radius; ++t) {
        const double w = std::exp(-0.5 * t * t / (sigma * sigma));
        k[static_cast<std::size_t>(t + radius)] = w;
        sum += w;
    }
    for (auto& w : k) {
        w /= sum;
    }
    return k;
}

/// Separable Gaussian blur, radius ceil(3 sigma), replicate boundary. sigma = 0 is the identity.
inline Frame gaussian_blur(const Frame& image, double sigma)
{
    if (!(sigma >= 0.0)) {
        throw Error("blur sigma must be nonnegative");
    }
    if (sigma == 0.0) {
        return image;
    }
    const auto k = gaussian_kernel(sigma);
    const auto radius = static_cast<Eigen::Index>(k.size() / 2);
    const Eigen::Index r = image.rows();
    const Eigen::Index s = image.cols();
    Frame tmp = Frame::Zero(r, s);
    for (Eigen::Index j = 0; j < s; ++j) {
        for (Eigen::Index t = -radius; t <= radius; ++t) {
            const double w = k[static_cast<std::size_t>(t + radius)];
            for (Eigen::Index i = 0; i < r; ++i) {
                tmp(i, j) += w * image(std::clamp<Eigen::Index>(i + t, 0, r - 1), j);
            }
        }
    }
    Frame out = Frame::Zero(r, s);
    for (Eigen::Index t = -radius; t <= radius; ++t) {
        const double w = k[static_cast<std::size_t>(t + radius)];
        for (Eigen::Index j = 0; j < s; ++j) {
            out.col(j) += w * tmp.col(std::clamp<Eigen::Index>(j + t, 0, s - 1));
        }
    }
    return out;
}

/// Independent generator for frame k of a sequence seeded with `seed`.
inline std::mt19937_64 frame_rng(std::uint64_t seed, std::size_t k)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(static_cast<std::uint64_t>(k) >> 32), 1U};
    return std::mt19937_64(seq);
}

struct SimulatedSequence {
    FrameStack frames;
    std::vector<MotionField> fields;
    std::vector<bool> severe;  ///< per frame
    std::vector<double> strengths;

    [[nodiscard]] std::vector<std::size_t> severe_indices() const
    {
        std::vector<std::size_t> idx;
        for (std::size_t k = 0; k < severe.size(); ++k) {
            if (severe[k]) {
                idx.push_back(k);
            }
        }
        return idx;
    }
};

/// Exactly floor(severe_fraction * n) frames flagged severe, positions shuffled by the seed.
inline std::vector<bool> severity_partition(const TurbulenceConfig& config)
{
    std::vector<bool> severe(config.n_frames, false);
    std::fill_n(severe.begin(), static_cast<std::ptrdiff_t>(config.severe_count()), true);
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32), 0U};
    std::mt19937_64 rng(seq);
    std::shuffle(severe.begin(), severe.end(), rng);
    return severe;
}

inline SimulatedSequence simulate_sequence(const Frame& truth, const TurbulenceConfig& config)
{
    config.validate();
    if (truth.size() == 0 || !truth.allFinite() || truth.minCoeff() < 0.0 || truth.maxCoeff() > 1.0) {
        throw Error("ground truth must be a nonempty frame with intensities in [0,1]");
    }
    SimulatedSequence out;
    out.severe = severity_partition(config);
    std::vector<Frame> frames;
    frames.reserve(config.n_frames);
    for (std::size_t k = 0; k < config.n_frames; ++k) {
        std::mt19937_64 rng = frame_rng(config.seed, k);
        const auto& range = out.severe[k] ? config.severe_strength : config.mild_strength;
        std::uniform_real_distribution<double> pick(range[0], range[1]);
        const double strength = range[0] == range[1] ? range[0] : pick(rng);
        MotionField field = generate_motion_field(truth.rows(), truth.cols(), strength, config, rng);
        Frame frame = gaussian_blur(warp(truth, field), config.blur_sigma);
        const double noise = out.severe[k] ? config.noise_sigma : config.effective_mild_noise();
        if (noise > 0.0) {
            std::normal_distribution<double> n(0.0, noise);
            for (Eigen::Index j = 0; j < frame.cols(); ++j) {
                for (Eigen::Index i = 0; i < frame.rows(); ++i) {
                    frame(i, j) += n(rng);
                }
            }
        }
        frames.push_back(clamp_unit(frame));
        out.fields.push_back(std::move(field));
        out.strengths.push_back(strength);
    }
    out.frames = FrameStack(std::move(frames));
    return out;
}

}  // namespace turbrest

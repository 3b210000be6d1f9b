#pragma once
/**
 * @file core.hpp
 * @brief Frame stacks, subsample index sets, model parameters and energy
 * bookkeeping shared by the restoration models.
 *
 * Frames are r x s Eigen matrices holding intensities in [0,1]. A stack of n
 * frames is viewed as an rs x n matrix whose k-th column is frame k flattened
 * in column-major order (Eigen's native storage order).
 */

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace turbrest {

/// Error raised for violated preconditions and malformed inputs.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Frame = Eigen::MatrixXd;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/**
 * @brief Ordered sequence of equally sized grayscale frames.
 *
 * Construction validates that every frame shares the same dimensions and
 * that every intensity lies in [0,1].
 */
class FrameStack {
public:
    FrameStack() = default;

    explicit FrameStack(std::vector<Frame> frames) : frames_(std::move(frames))
    {
        if (frames_.empty()) {
            throw Error("frame stack must contain at least one frame");
        }
        const auto r = frames_.front().rows();
        const auto s = frames_.front().cols();
        if (r < 1 || s < 1) {
            throw Error("frames must have positive dimensions");
        }
        for (std::size_t k = 0; k < frames_.size(); ++k) {
            const Frame& f = frames_[k];
            if (f.rows() != r || f.cols() != s) {
                throw Error("frame " + std::to_string(k + 1) + " has dimensions " +
                            std::to_string(f.rows()) + "x" + std::to_string(f.cols()) +
                            ", expected " + std::to_string(r) + "x" + std::to_string(s));
            }
            if (!f.allFinite() || f.minCoeff() < 0.0 || f.maxCoeff() > 1.0) {
                throw Error("frame " + std::to_string(k + 1) + " has intensities outside [0,1]");
            }
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return frames_.size(); }
    [[nodiscard]] bool empty() const noexcept { return frames_.empty(); }
    [[nodiscard]] Eigen::Index rows() const noexcept { return empty() ? 0 : frames_.front().rows(); }
    [[nodiscard]] Eigen::Index cols() const noexcept { return empty() ? 0 : frames_.front().cols(); }
    [[nodiscard]] Eigen::Index pixels() const noexcept { return rows() * cols(); }

    [[nodiscard]] const Frame& operator[](std::size_t k) const { return frames_[k]; }
    [[nodiscard]] const std::vector<Frame>& frames() const noexcept { return frames_; }

    [[nodiscard]] auto begin() const noexcept { return frames_.begin(); }
    [[nodiscard]] auto end() const noexcept { return frames_.end(); }

    friend bool operator==(const FrameStack& a, const FrameStack& b)
    {
        if (a.size() != b.size()) {
            return false;
        }
        for (std::size_t k = 0; k < a.size(); ++k) {
            if (a[k].rows() != b[k].rows() || a[k].cols() != b[k].cols() || a[k] != b[k]) {
                return false;
            }
        }
        return true;
    }

private:
    std::vector<Frame> frames_;
};

/**
 * @brief Selected frames of a stack.
 *
 * Stored as strictly increasing zero-based positions; `one_based()` gives the
 * 1-based numbering used in every serialized artifact.
 */
class SubsampleSet {
public:
    SubsampleSet() = default;

    explicit SubsampleSet(std::vector<std::size_t> indices) : indices_(std::move(indices))
    {
        std::sort(indices_.begin(), indices_.end());
        if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end()) {
            throw Error("subsample contains duplicate indices");
        }
    }

    static SubsampleSet all(std::size_t n)
    {
        std::vector<std::size_t> idx(n);
        for (std::size_t k = 0; k < n; ++k) {
            idx[k] = k;
        }
        return SubsampleSet(std::move(idx));
    }

    static SubsampleSet from_one_based(const std::vector<std::size_t>& one_based)
    {
        std::vector<std::size_t> idx;
        idx.reserve(one_based.size());
        for (auto i : one_based) {
            if (i == 0) {
                throw Error("1-based subsample index must be positive");
            }
            idx.push_back(i - 1);
        }
        return SubsampleSet(std::move(idx));
    }

    [[nodiscard]] std::size_t size() const noexcept { return indices_.size(); }
    [[nodiscard]] bool empty() const noexcept { return indices_.empty(); }
    [[nodiscard]] const std::vector<std::size_t>& indices() const noexcept { return indices_; }
    [[nodiscard]] std::size_t operator[](std::size_t i) const { return indices_[i]; }
    [[nodiscard]] auto begin() const noexcept { return indices_.begin(); }
    [[nodiscard]] auto end() const noexcept { return indices_.end(); }

    [[nodiscard]] bool contains(std::size_t k) const
    {
        return std::binary_search(indices_.begin(), indices_.end(), k);
    }

    [[nodiscard]] std::vector<std::size_t> one_based() const
    {
        std::vector<std::size_t> out(indices_);
        for (auto& i : out) {
            ++i;
        }
        return out;
    }

    /// Throws unless the set is nonempty and every index addresses a frame of an n-frame stack.
    void validate_for(std::size_t n) const
    {
        if (indices_.empty()) {
            throw Error("empty subsample");
        }
        if (indices_.back() >= n) {
            throw Error("subsample index " + std::to_string(indices_.back() + 1) +
                        " out of range for " + std::to_string(n) + " frames");
        }
    }

    friend bool operator==(const SubsampleSet&, const SubsampleSet&) = default;

private:
    std::vector<std::size_t> indices_;
};

enum class Model { IRIS, LIRIS, TVIRIS_Aniso, TVIRIS_Iso };

inline std::string_view to_string(Model m)
{
    switch (m) {
    case Model::IRIS: return "iris";
    case Model::LIRIS: return "liris";
    case Model::TVIRIS_Aniso: return "tviris-aniso";
    case Model::TVIRIS_Iso: return "tviris-iso";
    }
    return "unknown";
}

inline Model parse_model(std::string_view name)
{
    if (name == "iris") return Model::IRIS;
    if (name == "liris") return Model::LIRIS;
    if (name == "tviris-aniso") return Model::TVIRIS_Aniso;
    if (name == "tviris-iso") return Model::TVIRIS_Iso;
    throw Error("unknown model '" + std::string(name) + "'");
}

inline bool is_tv_model(Model m) { return m == Model::TVIRIS_Aniso || m == Model::TVIRIS_Iso; }

/// Schedule of the exact augmented Lagrange multiplier RPCA solver.
struct RpcaOptions {
    std::optional<double> beta;    ///< sparse weight; 1/sqrt(max(rows, cols)) when unset
    std::optional<double> alpha0;  ///< initial penalty; 1.25/||M||_2 when unset
    double growth = 1.6;
    double alpha_max = 1e7;
    double tol = 1e-7;
    int max_iter = 500;
    double inner_tol = 1e-6;
    int max_inner = 1000;
};

/// Inner split-operator solver settings for the TV-regularized I-subproblem.
struct TvOptions {
    double inner_tol = 1e-6;
    int max_inner = 200;
    /// Multiplier step; 2 gamma when unset. 1/(2 mu) is the other common choice but
    /// exceeds the ADMM stability bound for small mu.
    std::optional<double> dual_step;
};

struct ModelParams {
    Model model = Model::IRIS;
    double lambda = 300.0;
    /// Subsample-size reward weight; derived from the first J-step energies when unset.
    std::optional<double> tau;
    double rho = 0.1;
    double mu = 0.5;
    double gamma = 1.0;
    double epsilon = 1e-5;
    int max_outer = 100;
    RpcaOptions rpca;
    TvOptions tv;

    void validate() const
    {
        if (!(lambda >= 0.0)) throw Error("lambda must be nonnegative");
        if (tau && !(*tau >= 0.0)) throw Error("tau must be nonnegative");
        if (!(rho > 0.0)) throw Error("rho must be positive");
        if (!(epsilon > 0.0)) throw Error("epsilon must be positive");
        if (max_outer < 1) throw Error("max_outer must be at least 1");
        if (is_tv_model(model)) {
            if (!(mu >= 0.0)) throw Error("mu must be nonnegative");
            if (!(gamma > 0.0)) throw Error("gamma must be positive");
        }
        if (rpca.beta && !(*rpca.beta > 0.0)) throw Error("beta must be positive");
        if (rpca.alpha0 && !(*rpca.alpha0 > 0.0)) throw Error("alpha0 must be positive");
    }
};

/// One outer iteration of a restoration driver.
struct EnergyRecord {
    int iteration = 0;
    double total = 0.0;
    double mean_fidelity = 0.0;
    double mean_quality = 0.0;  ///< unweighted; the total carries lambda * mean_quality
    double regularization = 0.0;  ///< mu * R1(I); zero for the non-TV models
    double reward = 0.0;
    std::size_t subsample_size = 0;
};

class EnergyTrace {
public:
    void push(EnergyRecord rec)
    {
        const int expected = records_.empty() ? 1 : records_.back().iteration + 1;
        if (rec.iteration != expected) {
            throw Error("energy trace iterations must increase by one starting from 1");
        }
        records_.push_back(rec);
    }

    [[nodiscard]] std::size_t size() const noexcept { return records_.size(); }
    [[nodiscard]] bool empty() const noexcept { return records_.empty(); }
    [[nodiscard]] const EnergyRecord& back() const { return records_.back(); }
    [[nodiscard]] const EnergyRecord& operator[](std::size_t i) const { return records_[i]; }
    [[nodiscard]] const std::vector<EnergyRecord>& records() const noexcept { return records_; }
    [[nodiscard]] auto begin() const noexcept { return records_.begin(); }
    [[nodiscard]] auto end() const noexcept { return records_.end(); }

private:
    std::vector<EnergyRecord> records_;
};

// ---------------------------------------------------------------------------

/// rs x n matrix whose k-th column is frame k in column-major scan order.
inline Matrix stack_matrix(const FrameStack& stack)
{
    const Eigen::Index rs = stack.pixels();
    Matrix m(rs, static_cast<Eigen::Index>(stack.size()));
    for (std::size_t k = 0; k < stack.size(); ++k) {
        m.col(static_cast<Eigen::Index>(k)) = Eigen::Map<const Vector>(stack[k].data(), rs);
    }
    return m;
}

/// Column of a stack matrix reshaped back into an r x s frame.
inline Frame column_as_frame(const Eigen::Ref<const Vector>& column, Eigen::Index rows, Eigen::Index cols)
{
    if (column.size() != rows * cols) {
        throw Error("column length does not match frame dimensions");
    }
    Frame f(rows, cols);
    Eigen::Map<Vector>(f.data(), rows * cols) = column;
    return f;
}

inline FrameStack unstack(const Matrix& m, Eigen::Index rows, Eigen::Index cols)
{
    std::vector<Frame> frames;
    frames.reserve(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
        frames.push_back(column_as_frame(m.col(k), rows, cols));
    }
    return FrameStack(std::move(frames));
}

/// Stack matrix restricted to the columns in `subset`.
inline Matrix subsample_matrix(const Matrix& full, const SubsampleSet& subset)
{
    subset.validate_for(static_cast<std::size_t>(full.cols()));
    Matrix m(full.rows(), static_cast<Eigen::Index>(subset.size()));
    for (std::size_t j = 0; j < subset.size(); ++j) {
        m.col(static_cast<Eigen::Index>(j)) = full.col(static_cast<Eigen::Index>(subset[j]));
    }
    return m;
}

/// Pixelwise mean of the selected frames, the closed-form minimizer of the L2 data term.
inline Frame temporal_mean(const FrameStack& stack, const SubsampleSet& subset)
{
    if (subset.empty()) {
        throw Error("empty subsample");
    }
    subset.validate_for(stack.size());
    Frame acc = Frame::Zero(stack.rows(), stack.cols());
    for (auto k : subset) {
        acc += stack[k];
    }
    acc /= static_cast<double>(subset.size());
    // Rounding can push a mean of values at 1.0 one ulp past the range.
    return acc.cwiseMax(0.0).cwiseMin(1.0);
}

/// tau * (1 - exp(-rho * size)).
inline double subsample_reward(std::size_t size, double tau, double rho)
{
    return tau * -std::expm1(-rho * static_cast<double>(size));
}

/// Sum of squared pixel differences.
inline double squared_distance(const Frame& a, const Frame& b)
{
    return (a - b).squaredNorm();
}

inline Frame clamp_unit(const Frame& f) { return f.cwiseMax(0.0).cwiseMin(1.0); }

}  // namespace turbrest

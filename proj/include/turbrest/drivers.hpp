#pragma once
/**
 * @file drivers.hpp
 * @brief Alternating minimization over (image, subsample) for the three models.
 *
 * Every driver starts from an initial image I^0, then repeats
 *   J-step: per-frame energies against I^{t-1}, solved exactly by select_subsample;
 *   I-step: the image minimizing the energy for the new J;
 * and records E(I^t, J^t) once per outer iteration. E^0 is the energy of I^0
 * paired with the whole stack, so a sequence that is already a fixed point stops
 * after one iteration.
 */

#include "turbrest/core.hpp"
#include "turbrest/energy.hpp"
#include "turbrest/quality.hpp"
#include "turbrest/rpca.hpp"
#include "turbrest/selector.hpp"
#include "turbrest/tvsolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

namespace turbrest {

struct RestorationResult {
    Frame image;  ///< clamped to [0,1]
    SubsampleSet subsample;
    EnergyTrace trace;
    int iterations = 0;
    bool converged = false;
    double tau = 0.0;            ///< reward weight actually used
    bool solver_converged = true;  ///< every RPCA / TV inner solve met its tolerance
};

/// Fallback reward weight when the median first-iteration energy is not positive.
inline constexpr double kFallbackTau = 1.0;

/// Explicit tau if given, otherwise the median of the first J-step's per-frame energies.
inline double resolve_tau(const ModelParams& params, std::span<const double> first_energies)
{
    if (params.tau) {
        return *params.tau;
    }
    if (first_energies.empty()) {
        throw Error("cannot derive tau without frames");
    }
    std::vector<double> e(first_energies.begin(), first_energies.end());
    const std::size_t mid = e.size() / 2;
    std::nth_element(e.begin(), e.begin() + static_cast<std::ptrdiff_t>(mid), e.end());
    double median = e[mid];
    if (e.size() % 2 == 0) {
        median = 0.5 * (median + *std::max_element(e.begin(), e.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    return median > 0.0 && std::isfinite(median) ? median : kFallbackTau;
}

namespace detail {

inline Vector flat(const Frame& f) { return Eigen::Map<const Vector>(f.data(), f.size()); }

/// ||I - c_k||^2 + lambda q_k for every column c_k of `reference`.
inline std::vector<double> frame_energies(const Frame& image, const Matrix& reference, const std::vector<double>& quality,
                                          double lambda)
{
    const Vector img = flat(image);
    std::vector<double> e(static_cast<std::size_t>(reference.cols()));
    for (Eigen::Index k = 0; k < reference.cols(); ++k) {
        e[static_cast<std::size_t>(k)] = (img - reference.col(k)).squaredNorm() + lambda * quality[static_cast<std::size_t>(k)];
    }
    return e;
}

/// Energy of `image` with `subset`, fidelity measured against the given columns (one per selected frame).
inline EnergyBreakdown subset_energy(const FrameStack& stack, const SubsampleSet& subset, const Frame& image,
                                     const ModelParams& params, double tau, const std::vector<double>& quality,
                                     const Matrix& columns)
{
    const Vector img = flat(image);
    std::vector<double> fid(subset.size());
    std::vector<double> q(subset.size());
    for (std::size_t j = 0; j < subset.size(); ++j) {
        fid[j] = (img - columns.col(static_cast<Eigen::Index>(j))).squaredNorm();
        q[j] = quality[subset[j]];
    }
    return model_energy(stack, subset, image, params, tau, q, fid);
}

inline Frame column_mean(const Matrix& m, Eigen::Index rows, Eigen::Index cols)
{
    return column_as_frame(m.rowwise().mean(), rows, cols);
}

inline void check_model(const ModelParams& params, bool ok, const char* driver)
{
    params.validate();
    if (!ok) {
        throw Error(std::string(driver) + " called with model " + std::string(to_string(params.model)));
    }
}

}  // namespace detail

/// One J-step followed by one I-step of IRIS from `image`; used for fixed-point checks.
inline std::pair<SubsampleSet, Frame> iris_step(const FrameStack& stack, const Frame& image,
                                                const std::vector<double>& quality, const ModelParams& params, double tau)
{
    const auto e = detail::frame_energies(image, stack_matrix(stack), quality, params.lambda);
    SubsampleSet j = select_subsample(e, tau, params.rho).subset;
    Frame next = temporal_mean(stack, j);
    return {std::move(j), std::move(next)};
}

inline RestorationResult iris(const FrameStack& stack, const ModelParams& params)
{
    detail::check_model(params, params.model == Model::IRIS, "iris");
    if (stack.empty()) {
        throw Error("frame stack must contain at least one frame");
    }
    const Matrix data = stack_matrix(stack);
    const std::vector<double> quality = sharpness_quality(stack).values;
    const SubsampleSet everything = SubsampleSet::all(stack.size());

    RestorationResult out;
    out.image = temporal_mean(stack, everything);
    out.subsample = everything;
    auto energies = detail::frame_energies(out.image, data, quality, params.lambda);
    out.tau = resolve_tau(params, energies);
    double prev = detail::subset_energy(stack, everything, out.image, params, out.tau, quality, data).total;

    for (int t = 1; t <= params.max_outer; ++t) {
        if (t > 1) {
            energies = detail::frame_energies(out.image, data, quality, params.lambda);
        }
        out.subsample = select_subsample(energies, out.tau, params.rho).subset;
        out.image = temporal_mean(stack, out.subsample);
        const auto e = detail::subset_energy(stack, out.subsample, out.image, params, out.tau, quality,
                                             subsample_matrix(data, out.subsample));
        out.trace.push(e.record(t));
        out.iterations = t;
        if (prev - e.total <= params.epsilon) {
            out.converged = true;
            break;
        }
        prev = e.total;
    }
    out.image = clamp_unit(out.image);
    return out;
}

/**
 * Low-rank parts of subsampled stack matrices, memoized per subsample. A
 * single column is taken as its own low-rank part: with the default sparse
 * weight 1/sqrt(rows) the l1 cost of a lone column never exceeds its nuclear
 * norm, so RPCA would push it into S.
 */
class LowRankCache {
public:
    LowRankCache(const Matrix& data, RpcaOptions opts) : data_(data), opts_(std::move(opts)) {}

    const Matrix& lowrank(const SubsampleSet& subset)
    {
        auto it = cache_.find(subset.indices());
        if (it != cache_.end()) {
            return it->second;
        }
        Matrix sub = subsample_matrix(data_, subset);
        if (sub.cols() > 1) {
            const Decomposition d = rpca_ealm(sub, opts_);
            all_converged_ = all_converged_ && d.converged;
            sub = d.L;
        }
        return cache_.emplace(subset.indices(), std::move(sub)).first->second;
    }

    [[nodiscard]] bool all_converged() const noexcept { return all_converged_; }

private:
    const Matrix& data_;
    RpcaOptions opts_;
    std::map<std::vector<std::size_t>, Matrix> cache_;
    bool all_converged_ = true;
};

inline RestorationResult liris(const FrameStack& stack, const ModelParams& params)
{
    detail::check_model(params, params.model == Model::LIRIS, "liris");
    if (stack.empty()) {
        throw Error("frame stack must contain at least one frame");
    }
    const Matrix data = stack_matrix(stack);
    const std::vector<double> quality = sharpness_quality(stack).values;
    const SubsampleSet everything = SubsampleSet::all(stack.size());
    LowRankCache cache(data, params.rpca);
    const Matrix full = cache.lowrank(everything);

    RestorationResult out;
    out.image = detail::column_mean(full, stack.rows(), stack.cols());
    out.subsample = everything;
    out.tau = resolve_tau(params, detail::frame_energies(out.image, full, quality, params.lambda));
    double prev = detail::subset_energy(stack, everything, out.image, params, out.tau, quality, full).total;

    for (int t = 1; t <= params.max_outer; ++t) {
        // Relaxed J-step: every frame is measured against its column of the full low-rank part.
        const auto energies = detail::frame_energies(out.image, full, quality, params.lambda);
        out.subsample = select_subsample(energies, out.tau, params.rho).subset;
        const Matrix& lj = cache.lowrank(out.subsample);
        out.image = detail::column_mean(lj, stack.rows(), stack.cols());
        const auto e = detail::subset_energy(stack, out.subsample, out.image, params, out.tau, quality, lj);
        out.trace.push(e.record(t));
        out.iterations = t;
        if (std::abs(prev - e.total) <= params.epsilon) {
            out.converged = true;
            break;
        }
        prev = e.total;
    }
    out.solver_converged = cache.all_converged();
    out.image = clamp_unit(out.image);
    return out;
}

struct ExhaustiveJStep {
    Selection selection;
    double lowrank_deviation = 0.0;  ///< max over J, k in J of ||(L_J)_k - (L_full)_k||_2
};

/**
 * J-step of the unrelaxed low-rank energy: every nonempty subsample gets its own
 * RPCA and is scored against `image`. Also reports the largest column deviation
 * between per-subset and whole-stack low-rank parts, the l of the separation
 * certificate. Cost is 2^n RPCA solves.
 */
inline ExhaustiveJStep exhaustive_lowrank_jstep(const FrameStack& stack, const Frame& image, const ModelParams& params,
                                                double tau)
{
    const std::size_t n = stack.size();
    if (n == 0 || n > kBruteForceLimit) {
        throw Error("oracle size limit: exhaustive J-step supports 1 to 20 frames");
    }
    const Matrix data = stack_matrix(stack);
    const std::vector<double> quality = sharpness_quality(stack).values;
    LowRankCache cache(data, params.rpca);
    const Matrix full = cache.lowrank(SubsampleSet::all(n));

    ExhaustiveJStep out;
    out.selection.energy = std::numeric_limits<double>::infinity();
    for (std::uint32_t mask = 1; mask < (std::uint32_t{1} << n); ++mask) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < n; ++i) {
            if ((mask >> i) & 1U) {
                idx.push_back(i);
            }
        }
        SubsampleSet j(std::move(idx));
        const Matrix& lj = cache.lowrank(j);
        for (std::size_t c = 0; c < j.size(); ++c) {
            out.lowrank_deviation = std::max(
                out.lowrank_deviation,
                (lj.col(static_cast<Eigen::Index>(c)) - full.col(static_cast<Eigen::Index>(j[c]))).norm());
        }
        const double e = detail::subset_energy(stack, j, image, params, tau, quality, lj).total;
        if (e < out.selection.energy) {
            out.selection = {std::move(j), e};
        }
    }
    return out;
}

/// The relaxed LIRIS J-step from `image`, with energies against the whole-stack low-rank part.
inline Selection relaxed_lowrank_jstep(const FrameStack& stack, const Frame& image, const Matrix& full_lowrank,
                                       const ModelParams& params, double tau)
{
    const std::vector<double> quality = sharpness_quality(stack).values;
    return select_subsample(detail::frame_energies(image, full_lowrank, quality, params.lambda), tau, params.rho);
}

inline RestorationResult tviris(const FrameStack& stack, const ModelParams& params)
{
    detail::check_model(params, is_tv_model(params.model), "tviris");
    if (stack.empty()) {
        throw Error("frame stack must contain at least one frame");
    }
    const TvVariant variant = params.model == Model::TVIRIS_Iso ? TvVariant::Iso : TvVariant::Aniso;
    const Matrix data = stack_matrix(stack);
    const std::vector<double> quality = tv_quality(stack, variant).values;
    const SubsampleSet everything = SubsampleSet::all(stack.size());

    RestorationResult out;
    out.image = temporal_mean(stack, everything);
    out.subsample = everything;
    auto energies = detail::frame_energies(out.image, data, quality, params.lambda);
    out.tau = resolve_tau(params, energies);
    double prev = detail::subset_energy(stack, everything, out.image, params, out.tau, quality, data).total;

    for (int t = 1; t <= params.max_outer; ++t) {
        if (t > 1) {
            energies = detail::frame_energies(out.image, data, quality, params.lambda);
        }
        out.subsample = select_subsample(energies, out.tau, params.rho).subset;
        const TvResult tv = tv_restore(temporal_mean(stack, out.subsample), params.mu, params.gamma, variant, params.tv);
        out.solver_converged = out.solver_converged && tv.converged;
        out.image = clamp_unit(tv.image);
        const auto e = detail::subset_energy(stack, out.subsample, out.image, params, out.tau, quality,
                                             subsample_matrix(data, out.subsample));
        out.trace.push(e.record(t));
        out.iterations = t;
        if (std::abs(prev - e.total) <= params.epsilon) {
            out.converged = true;
            break;
        }
        prev = e.total;
    }
    return out;
}

/// Dispatches on params.model.
inline RestorationResult restore(const FrameStack& stack, const ModelParams& params)
{
    switch (params.model) {
    case Model::IRIS: return iris(stack, params);
    case Model::LIRIS: return liris(stack, params);
    default: return tviris(stack, params);
    }
}

}  // namespace turbrest

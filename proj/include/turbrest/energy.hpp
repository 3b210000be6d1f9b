#pragma once
// Evaluation of the joint (image, subsample) energy
//   (1/|J|) sum_{k in J} [fidelity_k + lambda * quality_k] + mu * R1(I) - tau (1 - exp(-rho |J|))
// given per-frame fidelity and quality values for the frames in J.

#include "turbrest/core.hpp"
#include "turbrest/quality.hpp"

#include <span>

namespace turbrest {

struct EnergyBreakdown {
    double total = 0.0;
    double mean_fidelity = 0.0;
    double mean_quality = 0.0;
    double regularization = 0.0;
    double reward = 0.0;
    std::size_t subsample_size = 0;

    [[nodiscard]] EnergyRecord record(int iteration) const
    {
        return {iteration, total, mean_fidelity, mean_quality, regularization, reward, subsample_size};
    }
};

/// R1(I): the TV of the restored image for the TV models, zero otherwise.
inline double image_regularizer(const Frame& image, Model model)
{
    switch (model) {
    case Model::TVIRIS_Aniso: return tv_value(image, TvVariant::Aniso);
    case Model::TVIRIS_Iso: return tv_value(image, TvVariant::Iso);
    default: return 0.0;
    }
}

/**
 * Energy of `image` paired with `subset`. `fidelity` and `quality` hold one
 * entry per selected frame, in the order of `subset`. `tau` must already be
 * resolved (the optional in ModelParams is not consulted).
 */
inline EnergyBreakdown model_energy(const FrameStack& stack, const SubsampleSet& subset, const Frame& image,
                                    const ModelParams& params, double tau, std::span<const double> quality,
                                    std::span<const double> fidelity)
{
    if (subset.empty()) {
        throw Error("empty subsample");
    }
    subset.validate_for(stack.size());
    if (quality.size() != subset.size() || fidelity.size() != subset.size()) {
        throw Error("fidelity and quality vectors need one entry per selected frame");
    }
    EnergyBreakdown e;
    e.subsample_size = subset.size();
    const double inv = 1.0 / static_cast<double>(subset.size());
    double fid = 0.0;
    double qual = 0.0;
    for (std::size_t j = 0; j < subset.size(); ++j) {
        fid += fidelity[j];
        qual += quality[j];
    }
    e.mean_fidelity = fid * inv;
    e.mean_quality = qual * inv;
    e.regularization = is_tv_model(params.model) ? params.mu * image_regularizer(image, params.model) : 0.0;
    e.reward = subsample_reward(subset.size(), tau, params.rho);
    e.total = e.mean_fidelity + params.lambda * e.mean_quality + e.regularization - e.reward;
    return e;
}

}  // namespace turbrest

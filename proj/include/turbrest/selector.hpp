#pragma once
/**
 * @file selector.hpp
 * @brief Globally optimal subsample selection for a fixed reference image.
 *
 * With per-frame energies E_k fixed, the subsample problem
 *
 *     min_J  (1/|J|) sum_{k in J} E_k - tau (1 - exp(-rho |J|))
 *
 * is solved exactly by sorting: for a fixed cardinality p the p smallest
 * energies are optimal, so scanning the prefix averages S_p over all p
 * covers every cardinality. An exhaustive 2^n oracle and the separation
 * diagnostics that certify the low-rank relaxation live here too.
 */

#include "turbrest/core.hpp"

#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace turbrest {

struct Selection {
    SubsampleSet subset;
    double energy = 0.0;
};

/// Frame order by ascending energy; ties keep the original frame order.
inline std::vector<std::size_t> energy_order(std::span<const double> energies)
{
    std::vector<std::size_t> order(energies.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return energies[a] < energies[b]; });
    return order;
}

/// S_j for j = 1..n (stored at j-1): prefix averages of the sorted energies minus the reward.
inline std::vector<double> accumulated_energies(std::span<const double> energies, double tau, double rho)
{
    const auto order = energy_order(energies);
    std::vector<double> s(energies.size());
    double prefix = 0.0;
    for (std::size_t j = 0; j < order.size(); ++j) {
        prefix += energies[order[j]];
        s[j] = prefix / static_cast<double>(j + 1) - subsample_reward(j + 1, tau, rho);
    }
    return s;
}

inline Selection select_subsample(std::span<const double> energies, double tau, double rho)
{
    if (energies.empty()) {
        throw Error("select_subsample needs at least one frame");
    }
    for (double e : energies) {
        if (!std::isfinite(e)) {
            throw Error("per-frame energies must be finite");
        }
    }
    const auto order = energy_order(energies);
    double prefix = 0.0;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_size = 0;
    for (std::size_t j = 0; j < order.size(); ++j) {
        prefix += energies[order[j]];
        const double s = prefix / static_cast<double>(j + 1) - subsample_reward(j + 1, tau, rho);
        if (s < best) {  // strict: the smallest size wins ties
            best = s;
            best_size = j + 1;
        }
    }
    return {SubsampleSet(std::vector<std::size_t>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(best_size))),
            best};
}

inline constexpr std::size_t kBruteForceLimit = 20;

/// Evaluates every nonempty subset. Ties resolve to the lexicographically smallest index list.
inline Selection brute_force_select(std::span<const double> energies, double tau, double rho)
{
    const std::size_t n = energies.size();
    if (n == 0) {
        throw Error("brute_force_select needs at least one frame");
    }
    if (n > kBruteForceLimit) {
        throw Error("oracle size limit: brute-force selection supports at most 20 frames");
    }
    std::vector<double> reward(n + 1);
    for (std::size_t p = 0; p <= n; ++p) {
        reward[p] = subsample_reward(p, tau, rho);
    }

    // Lexicographic order of the ascending index lists encoded by two masks.
    auto lex_less = [n](std::uint32_t a, std::uint32_t b) {
        for (std::size_t i = 0; i < n; ++i) {
            const bool ia = (a >> i) & 1U;
            const bool ib = (b >> i) & 1U;
            if (ia == ib) {
                continue;
            }
            // The list lacking index i is smaller only if it has ended.
            const std::uint32_t rest = (ia ? b : a) >> (i + 1);
            return ia ? rest != 0 : rest == 0;
        }
        return false;
    };

    const std::uint32_t total = (std::uint32_t{1} << n);
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t best_mask = 0;
    for (std::uint32_t mask = 1; mask < total; ++mask) {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if ((mask >> i) & 1U) {
                sum += energies[i];
                ++count;
            }
        }
        const double e = sum / static_cast<double>(count) - reward[count];
        if (e < best || (e == best && lex_less(mask, best_mask))) {
            best = e;
            best_mask = mask;
        }
    }
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i) {
        if ((best_mask >> i) & 1U) {
            idx.push_back(i);
        }
    }
    return {SubsampleSet(std::move(idx)), best};
}

struct SeparationDiagnostics {
    double d_E = std::numeric_limits<double>::infinity();  ///< min gap between sorted per-frame energies
    double d_S = std::numeric_limits<double>::infinity();  ///< min gap between sorted accumulated energies
    double l = 0.0;  ///< low-rank column perturbation bound
    double M = 0.0;  ///< bound on ||I - (L_J)_i||_2 over subsets J and i in J
    bool subset_condition = false;       ///< l < d_S / (4M): relaxed selection equals exhaustive selection
    bool cardinality_condition = false;  ///< l < d_E / (4M): holds for every fixed cardinality
};

inline double min_sorted_gap(std::vector<double> values)
{
    if (values.size() < 2) {
        return std::numeric_limits<double>::infinity();
    }
    std::sort(values.begin(), values.end());
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < values.size(); ++i) {
        gap = std::min(gap, values[i] - values[i - 1]);
    }
    return gap;
}

/**
 * Separation quantities certifying that the relaxed J-step (energies measured
 * against the low-rank part of the whole stack) selects the same subsample as
 * the exhaustive per-subset low-rank J-step.
 *
 * `full_lowrank` holds one column per frame. M is bounded as
 * max_k ||I - (L_full)_k|| + l, which dominates ||I - (L_J)_k|| for every J by
 * the triangle inequality.
 */
inline SeparationDiagnostics separation_diagnostics(const Frame& reference, const Matrix& full_lowrank,
                                                    double per_subset_lowrank_bound,
                                                    std::span<const double> energies, double tau, double rho)
{
    if (full_lowrank.rows() != reference.size()) {
        throw Error("low-rank columns do not match the reference frame size");
    }
    if (static_cast<std::size_t>(full_lowrank.cols()) != energies.size()) {
        throw Error("need one low-rank column per energy");
    }
    if (!(per_subset_lowrank_bound >= 0.0)) {
        throw Error("low-rank perturbation bound must be nonnegative");
    }
    SeparationDiagnostics d;
    d.l = per_subset_lowrank_bound;
    const Eigen::Map<const Vector> ref(reference.data(), reference.size());
    double col_max = 0.0;
    for (Eigen::Index k = 0; k < full_lowrank.cols(); ++k) {
        col_max = std::max(col_max, (ref - full_lowrank.col(k)).norm());
    }
    d.M = col_max + d.l;
    d.d_E = min_sorted_gap(std::vector<double>(energies.begin(), energies.end()));
    d.d_S = min_sorted_gap(accumulated_energies(energies, tau, rho));
    auto holds = [&](double gap) {
        if (!(gap > 0.0)) {
            return false;
        }
        if (d.M == 0.0) {
            return d.l == 0.0;
        }
        return d.l < gap / (4.0 * d.M);
    };
    d.subset_condition = holds(d.d_S);
    d.cardinality_condition = holds(d.d_E);
    return d;
}

}  // namespace turbrest

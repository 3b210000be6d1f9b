#pragma once
/**
 * @file rpca.hpp
 * @brief Robust PCA by the exact augmented Lagrange multiplier method.
 *
 * Solves  min ||L||_* + beta ||S||_1  subject to  L + S = M.
 *
 * Each outer iteration minimizes the augmented Lagrangian
 *   ||L||_* + beta ||S||_1 + <Lambda, M - L - S> + alpha/2 ||M - L - S||_F^2
 * over (L, S) exactly by alternating singular value thresholding and entrywise
 * shrinkage until the pair stops moving, then takes a multiplier step
 * Lambda += alpha (M - L - S) and grows alpha geometrically.
 */

#include "turbrest/core.hpp"
#include "turbrest/shrink.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace turbrest {

struct Decomposition {
    Matrix L;
    Matrix S;
    int iterations = 0;        ///< outer (multiplier) iterations
    int inner_iterations = 0;  ///< total thresholding sweeps
    double residual = 0.0;     ///< ||M - L - S||_F / ||M||_F
    bool converged = false;
};

/// Singular value thresholding: U max(Sigma - threshold, 0) V^T.
inline Matrix svt(const Matrix& a, double threshold)
{
    if (threshold < 0.0) {
        throw Error("svt threshold must be nonnegative");
    }
    if (a.size() == 0) {
        return a;
    }
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector sigma = (svd.singularValues().array() - threshold).cwiseMax(0.0).matrix();
    Eigen::Index keep = 0;
    while (keep < sigma.size() && sigma(keep) > 0.0) {
        ++keep;
    }
    if (keep == 0) {
        return Matrix::Zero(a.rows(), a.cols());
    }
    return svd.matrixU().leftCols(keep) * sigma.head(keep).asDiagonal() * svd.matrixV().leftCols(keep).transpose();
}

inline double nuclear_norm(const Matrix& a)
{
    if (a.size() == 0) {
        return 0.0;
    }
    Eigen::BDCSVD<Matrix> svd(a);
    return svd.singularValues().sum();
}

inline double spectral_norm(const Matrix& a)
{
    if (a.size() == 0) {
        return 0.0;
    }
    Eigen::BDCSVD<Matrix> svd(a);
    return svd.singularValues()(0);
}

inline double default_rpca_beta(Eigen::Index rows, Eigen::Index cols)
{
    return 1.0 / std::sqrt(static_cast<double>(std::max(rows, cols)));
}

inline Decomposition rpca_ealm(const Matrix& m, const RpcaOptions& opts = {})
{
    if (m.cols() < 1 || m.rows() < 1) {
        throw Error("rpca needs a nonempty matrix");
    }
    if (!m.allFinite()) {
        throw Error("rpca input contains non-finite entries");
    }
    const double beta = opts.beta.value_or(default_rpca_beta(m.rows(), m.cols()));
    if (!(beta > 0.0)) {
        throw Error("rpca beta must be positive");
    }

    Decomposition out;
    const double m_norm = m.norm();
    if (m_norm == 0.0) {
        out.L = Matrix::Zero(m.rows(), m.cols());
        out.S = Matrix::Zero(m.rows(), m.cols());
        out.iterations = 1;
        out.converged = true;
        return out;
    }

    const double two_norm = spectral_norm(m);
    double alpha = opts.alpha0.value_or(1.25 / two_norm);

    // Dual start sign(M) / J(sign(M)), J(X) = max(||X||_2, ||X||_inf / beta).
    Matrix lambda = m.unaryExpr([](double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); });
    const double dual_scale = std::max(spectral_norm(lambda), lambda.cwiseAbs().maxCoeff() / beta);
    if (dual_scale > 0.0) {
        lambda /= dual_scale;
    }

    const double root_size = std::sqrt(static_cast<double>(m.size()));
    Matrix L = Matrix::Zero(m.rows(), m.cols());
    Matrix S = Matrix::Zero(m.rows(), m.cols());
    Matrix best_L = L;
    Matrix best_S = S;
    double best_residual = std::numeric_limits<double>::infinity();

    for (int it = 1; it <= opts.max_iter; ++it) {
        const Matrix shifted = m + lambda / alpha;
        for (int inner = 0; inner < opts.max_inner; ++inner) {
            Matrix L_next = svt(shifted - S, 1.0 / alpha);
            Matrix S_next = shrink(shifted - L_next, beta / alpha);
            // Relative movement of the pair, and the alpha-scaled S movement, which bounds
            // the dual infeasibility left by the L-step and grows with the penalty.
            const double step_s = (S_next - S).norm();
            const double change = std::max(std::max((L_next - L).norm(), step_s) / m_norm, alpha * step_s / root_size);
            L = std::move(L_next);
            S = std::move(S_next);
            ++out.inner_iterations;
            if (change < opts.inner_tol) {
                break;
            }
        }
        const Matrix gap = m - L - S;
        const double residual = gap.norm() / m_norm;
        out.iterations = it;
        if (residual < best_residual) {
            best_residual = residual;
            best_L = L;
            best_S = S;
        }
        if (residual <= opts.tol) {
            out.converged = true;
            break;
        }
        lambda += alpha * gap;
        alpha = std::min(alpha * opts.growth, opts.alpha_max);
    }

    out.L = std::move(best_L);
    out.S = std::move(best_S);
    out.residual = best_residual;
    return out;
}

/// ||L||_* + beta ||S||_1.
inline double rpca_objective(const Decomposition& d, double beta)
{
    return nuclear_norm(d.L) + beta * d.S.cwiseAbs().sum();
}

}  // namespace turbrest

#pragma once
/**
 * @file tvsolver.hpp
 * @brief TV-regularized restoration of a temporal mean by operator splitting.
 *
 * The I-subproblem of the TV model reduces, up to a constant, to the ROF problem
 *
 *     min_I ||I - f||^2 + mu TV(I),     f = temporal mean of the subsample,
 *
 * since (1/|J|) sum_k ||I - I_k||^2 = ||I - f||^2 + const. Introducing
 * D = grad(I) with multipliers Lambda and penalty gamma gives the Lagrangian
 *
 *     ||I - f||^2 + mu |D| + <Lambda, D - grad I> + gamma ||D - grad I||^2.
 *
 * Its I-step is the screened Poisson system
 *
 *     (Id + gamma grad^T grad) I = f + 1/2 grad^T Lambda + gamma grad^T D,
 *
 * obtained by setting the gradient 2(I - f) - grad^T Lambda - 2 gamma grad^T (D - grad I)
 * to zero. grad^T grad is the positive semidefinite Neumann Laplacian, so the
 * system is positive definite and diagonalized by the 2-D DCT-II.
 *
 * The anisotropic D-step is D = shrink_mu(2 gamma grad I - Lambda) / (2 gamma),
 * the exact minimizer for the "+<Lambda, D - grad I>" sign convention used by
 * the I-step and the multiplier ascent Lambda += step (D - grad I). The
 * isotropic D-step replaces the coupled nonlinear condition by the relaxed
 * linear update (mu + 2 gamma s) D = s (2 gamma grad I - Lambda) with s the
 * previous |D|, then refreshes s = sqrt(Dx^2 + Dy^2).
 */

#include "turbrest/core.hpp"
#include "turbrest/quality.hpp"
#include "turbrest/shrink.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace turbrest {

/// Applies (Id + gamma grad^T grad).
inline Frame apply_screened_poisson(const Frame& img, double gamma)
{
    return img + gamma * (grad_x_adjoint(grad_x(img)) + grad_y_adjoint(grad_y(img)));
}

/// Orthonormal DCT-II matrix: row k is the k-th cosine mode sampled at the n pixel centers.
inline Matrix dct2_matrix(Eigen::Index n)
{
    Matrix c(n, n);
    const double nd = static_cast<double>(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double scale = k == 0 ? std::sqrt(1.0 / nd) : std::sqrt(2.0 / nd);
        for (Eigen::Index i = 0; i < n; ++i) {
            c(k, i) = scale * std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * static_cast<double>(i) + 1.0) /
                                       (2.0 * nd));
        }
    }
    return c;
}

/**
 * Direct solver for (Id + gamma grad^T grad) I = rhs on a fixed grid. The 1-D
 * Neumann Laplacian has DCT-II eigenvectors with eigenvalues 2 - 2 cos(pi k / n),
 * so the 2-D operator is diagonal in the separable DCT basis.
 */
class ScreenedPoissonSolver {
public:
    ScreenedPoissonSolver(Eigen::Index rows, Eigen::Index cols, double gamma)
        : rows_(rows), cols_(cols), gamma_(gamma), c_rows_(dct2_matrix(rows)), c_cols_(dct2_matrix(cols))
    {
        if (rows < 1 || cols < 1) {
            throw Error("screened Poisson grid must be nonempty");
        }
        if (!(gamma >= 0.0)) {
            throw Error("gamma must be nonnegative");
        }
        inv_diag_.resize(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j) {
            const double ey = eigenvalue(j, cols);
            for (Eigen::Index i = 0; i < rows; ++i) {
                inv_diag_(i, j) = 1.0 / (1.0 + gamma * (eigenvalue(i, rows) + ey));
            }
        }
    }

    [[nodiscard]] Frame solve(const Frame& rhs) const
    {
        if (rhs.rows() != rows_ || rhs.cols() != cols_) {
            throw Error("right-hand side does not match the solver grid");
        }
        if (gamma_ == 0.0) {
            return rhs;
        }
        const Matrix coeffs = (c_rows_ * rhs * c_cols_.transpose()).cwiseProduct(inv_diag_);
        return c_rows_.transpose() * coeffs * c_cols_;
    }

    [[nodiscard]] double gamma() const noexcept { return gamma_; }

private:
    static double eigenvalue(Eigen::Index k, Eigen::Index n)
    {
        return 2.0 - 2.0 * std::cos(std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
    }

    Eigen::Index rows_;
    Eigen::Index cols_;
    double gamma_;
    Matrix c_rows_;
    Matrix c_cols_;
    Matrix inv_diag_;
};

inline Frame solve_screened_poisson(const Frame& rhs, double gamma)
{
    return ScreenedPoissonSolver(rhs.rows(), rhs.cols(), gamma).solve(rhs);
}

/// Matrix-free conjugate gradient on the same operator; iterates until ||residual|| <= tol ||rhs||.
inline Frame solve_screened_poisson_cg(const Frame& rhs, double gamma, double tol = 1e-12, int max_iter = 10000)
{
    if (!(gamma >= 0.0)) {
        throw Error("gamma must be nonnegative");
    }
    Frame x = rhs;
    Frame r = rhs - apply_screened_poisson(x, gamma);
    Frame p = r;
    double rr = r.squaredNorm();
    const double stop = tol * tol * rhs.squaredNorm();
    for (int it = 0; it < max_iter && rr > stop; ++it) {
        const Frame ap = apply_screened_poisson(p, gamma);
        const double step = rr / p.cwiseProduct(ap).sum();
        x += step * p;
        r -= step * ap;
        const double rr_next = r.squaredNorm();
        p = r + (rr_next / rr) * p;
        rr = rr_next;
    }
    return x;
}

/// ||I - f||^2 + mu TV(I).
inline double rof_objective(const Frame& image, const Frame& data, double mu, TvVariant variant)
{
    return (image - data).squaredNorm() + mu * tv_value(image, variant);
}

struct SplitState {
    Frame Dx, Dy;
    Frame Lx, Ly;
    Frame s_field;  ///< |D| per pixel; isotropic variant only
};

struct TvResult {
    Frame image;
    SplitState state;  ///< state after the last inner iteration
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
};

inline TvResult tv_restore(const Frame& mean_frame, double mu, double gamma, TvVariant variant,
                           const TvOptions& opts = {})
{
    if (!(mu >= 0.0)) {
        throw Error("mu must be nonnegative");
    }
    if (!(gamma > 0.0)) {
        throw Error("gamma must be positive");
    }
    const Frame& f = mean_frame;

    TvResult out;
    out.state.Dx = grad_x(f);
    out.state.Dy = grad_y(f);
    out.state.Lx = Frame::Zero(f.rows(), f.cols());
    out.state.Ly = Frame::Zero(f.rows(), f.cols());
    if (variant == TvVariant::Iso) {
        out.state.s_field = (out.state.Dx.array().square() + out.state.Dy.array().square()).sqrt().matrix();
    }
    out.image = f;
    out.objective = rof_objective(f, f, mu, variant);
    if (mu == 0.0 || out.objective == 0.0) {
        out.converged = true;
        return out;
    }

    const double step = opts.dual_step.value_or(2.0 * gamma);
    const ScreenedPoissonSolver solver(f.rows(), f.cols(), gamma);
    SplitState& st = out.state;
    double prev = out.objective;

    for (int m = 1; m <= opts.max_inner; ++m) {
        const Frame rhs = f + 0.5 * (grad_x_adjoint(st.Lx) + grad_y_adjoint(st.Ly)) +
                          gamma * (grad_x_adjoint(st.Dx) + grad_y_adjoint(st.Dy));
        const Frame img = solver.solve(rhs);
        const Frame gx = grad_x(img);
        const Frame gy = grad_y(img);

        if (variant == TvVariant::Aniso) {
            st.Dx = shrink(2.0 * gamma * gx - st.Lx, mu) / (2.0 * gamma);
            st.Dy = shrink(2.0 * gamma * gy - st.Ly, mu) / (2.0 * gamma);
        } else {
            const auto s = st.s_field.array();
            const auto denom = mu + 2.0 * gamma * s;
            st.Dx = (s * (2.0 * gamma * gx - st.Lx).array() / denom).matrix();
            st.Dy = (s * (2.0 * gamma * gy - st.Ly).array() / denom).matrix();
            st.s_field = (st.Dx.array().square() + st.Dy.array().square()).sqrt().matrix();
        }
        st.Lx += step * (st.Dx - gx);
        st.Ly += step * (st.Dy - gy);

        const double obj = rof_objective(img, f, mu, variant);
        out.iterations = m;
        if (obj < out.objective) {
            out.objective = obj;
            out.image = img;
        }
        // The first I-step reproduces f exactly, so change is measured between solver iterates only.
        if (m > 1 &&
            std::abs(prev - obj) <= opts.inner_tol * std::max(std::abs(prev), std::numeric_limits<double>::min())) {
            out.converged = true;
            break;
        }
        prev = obj;
    }
    return out;
}

}  // namespace turbrest

#pragma once
// Soft-thresholding, the proximal map of kappa * |x|.

#include "turbrest/core.hpp"

namespace turbrest {

/// sign(x) max(|x| - kappa, 0).
inline double shrink(double x, double kappa)
{
    if (x > kappa) return x - kappa;
    if (x < -kappa) return x + kappa;
    return 0.0;
}

inline Matrix shrink(const Matrix& x, double kappa)
{
    if (kappa < 0.0) {
        throw Error("shrink threshold must be nonnegative");
    }
    return x.unaryExpr([kappa](double v) { return shrink(v, kappa); });
}

}  // namespace turbrest

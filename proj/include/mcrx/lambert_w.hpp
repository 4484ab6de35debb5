/**
 * @file lambert_w.hpp
 * @brief Principal branch W₀ of the Lambert W function on the real line.
 *
 * W₀(x) solves w·eʷ = x with w ≥ -1 for x ≥ -1/e. The starting point depends
 * on the region (branch-point series near -1/e, a log1p-based approximation
 * for moderate x, the asymptotic log expansion for x > e) and is refined by
 * Halley iteration until the step falls below 1e-14 (relative to 1 + |w|).
 */
#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "errors.hpp"

namespace mcrx {

namespace detail {
inline constexpr double inv_e = 0.36787944117144233; // 1/e rounded to nearest
inline constexpr double branch_clamp = 1e-12;
} // namespace detail

inline double lambert_w0(double x) {
    using detail::inv_e;
    if (std::isnan(x))
        throw DomainError("lambert_w0: NaN argument");
    if (x < -inv_e - detail::branch_clamp)
        throw DomainError("lambert_w0: argument " + std::to_string(x) + " below branch point -1/e");
    if (x <= -inv_e)
        return -1.0;
    if (x == 0.0)
        return 0.0;
    if (std::isinf(x))
        return x;

    double w;
    if (x < -0.32) {
        // Series in p = sqrt(2(e x + 1)) around the branch point.
        const double p = std::sqrt(2.0 * (std::numbers::e * x + 1.0));
        w = -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0))));
    } else if (x <= std::numbers::e) {
        const double l = std::log1p(x);
        w = l * (1.0 - std::log1p(l) / (2.0 + l));
    } else {
        const double l1 = std::log(x);
        const double l2 = std::log(l1);
        w = l1 - l2 + l2 / l1;
    }

    for (int iter = 0; iter < 64; ++iter) {
        const double ew = std::exp(w);
        const double f = w * ew - x;
        if (f == 0.0)
            break;
        const double wp1 = w + 1.0;
        if (wp1 == 0.0)
            break;
        const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        const double step = f / denom;
        if (!std::isfinite(step))
            break;
        w -= step;
        if (w < -1.0)
            w = -1.0;
        if (std::abs(step) <= 1e-14 * (1.0 + std::abs(w)))
            break;
    }
    return w;
}

} // namespace mcrx

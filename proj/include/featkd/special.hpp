#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>

#include "featkd/matrix.hpp"

namespace featkd {

inline double sigmoid(double x) {
    // Evaluate from the side that keeps exp() small.
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// Binary step used by the hash family: 1 if x > 0, otherwise 0.
inline double sign_step(double x) {
    return x > 0.0 ? 1.0 : 0.0;
}

/// Angle in [0, pi] between two nonzero vectors. The normalized inner product
/// is clamped to [-1, 1] before arccos to absorb rounding.
inline double angle_between(const Vector& u, const Vector& v) {
    const double nu = norm2(u);
    const double nv = norm2(v);
    if (nu <= 0.0 || nv <= 0.0) {
        throw std::domain_error("angle_between: zero-magnitude vector");
    }
    const double c = std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
    return std::acos(c);
}

/// log Gamma(x) for x > 0, Lanczos approximation (g = 7, 9 terms).
/// Accurate to ~1e-13 relative over the range this library uses.
inline double log_gamma(double x) {
    if (!(x > 0.0)) {
        throw std::invalid_argument("log_gamma: requires x > 0");
    }
    static const double coeff[9] = {
        0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
        771.32342877765313,      -176.61502916214059,   12.507343278686905,
        -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
    if (x < 0.5) {
        // Reflection keeps the series argument above 0.5.
        return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) - log_gamma(1.0 - x);
    }
    const double z = x - 1.0;
    double series = coeff[0];
    for (int i = 1; i < 9; ++i) {
        series += coeff[i] / (z + static_cast<double>(i));
    }
    const double t = z + 7.5;
    return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t + std::log(series);
}

/// Surface area of the unit sphere in R^n: 2 pi^{n/2} / Gamma(n/2).
/// Computed through log_gamma so large n does not overflow.
inline double surface_area(std::size_t n) {
    if (n < 1) {
        throw std::invalid_argument("surface_area: requires n >= 1");
    }
    const double half_n = 0.5 * static_cast<double>(n);
    return std::exp(std::numbers::ln2 + half_n * std::log(std::numbers::pi) - log_gamma(half_n));
}

namespace detail {

inline double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-16) {
            break;
        }
    }
    return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
}

inline double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) {
            break;
        }
    }
    return h * std::exp(-x + a * std::log(x) - log_gamma(a));
}

}  // namespace detail

/// Regularized lower incomplete gamma P(a, x).
inline double gamma_p(double a, double x) {
    if (!(a > 0.0) || x < 0.0) {
        throw std::invalid_argument("gamma_p: requires a > 0 and x >= 0");
    }
    if (x == 0.0) {
        return 0.0;
    }
    if (x < a + 1.0) {
        return detail::gamma_p_series(a, x);
    }
    return 1.0 - detail::gamma_q_contfrac(a, x);
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
inline double gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0) {
        throw std::invalid_argument("gamma_q: requires a > 0 and x >= 0");
    }
    if (x == 0.0) {
        return 1.0;
    }
    if (x < a + 1.0) {
        return 1.0 - detail::gamma_p_series(a, x);
    }
    return detail::gamma_q_contfrac(a, x);
}

/// Survival function of the chi-square distribution with `dof` degrees of
/// freedom, i.e. the p-value of a goodness-of-fit statistic.
inline double chi_square_sf(double stat, std::size_t dof) {
    if (dof < 1) {
        throw std::invalid_argument("chi_square_sf: requires dof >= 1");
    }
    return gamma_q(0.5 * static_cast<double>(dof), 0.5 * stat);
}

}  // namespace featkd

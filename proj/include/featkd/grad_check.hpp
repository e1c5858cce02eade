#pragma once

#include <cstddef>
#include <stdexcept>

#include "featkd/matrix.hpp"

namespace featkd {

/// Central finite differences of a scalar function of a vector:
/// g_i = (f(x + h e_i) - f(x - h e_i)) / (2h). Test oracle for every
/// analytic gradient in this library.
template <class F>
Vector finite_diff_grad(F&& f, const Vector& x, double h) {
    if (!(h > 0.0)) {
        throw std::invalid_argument("finite_diff_grad: requires h > 0");
    }
    Vector grad(x.size(), 0.0);
    Vector probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        probe[i] = xi + h;
        const double fp = f(probe);
        probe[i] = xi - h;
        const double fm = f(probe);
        probe[i] = xi;
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

/// Relative L2 discrepancy between an analytic gradient and its finite
/// difference estimate, with an absolute floor for near-zero gradients.
inline double gradient_rel_error(const Vector& analytic, const Vector& numeric) {
    if (analytic.size() != numeric.size()) {
        throw std::invalid_argument("gradient_rel_error: size mismatch");
    }
    const double diff = norm2(sub(analytic, numeric));
    const double denom = std::max(norm2(numeric), 1e-12);
    return diff / denom;
}

}  // namespace featkd

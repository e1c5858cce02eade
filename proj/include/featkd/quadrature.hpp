#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace featkd {

/// Composite Simpson quadrature of f over [a, b] with `panels` panels
/// (2 * panels + 1 evaluations). Error is O(panels^-4) for smooth f.
/// A non-finite integrand value is reported as a failure rather than
/// silently propagated.
template <class F>
double integrate(F&& f, double a, double b, std::size_t panels) {
    if (!(a <= b)) {
        throw std::invalid_argument("integrate: requires a <= b");
    }
    if (panels < 1) {
        throw std::invalid_argument("integrate: requires panels >= 1");
    }
    if (a == b) {
        return 0.0;
    }
    const double h = (b - a) / static_cast<double>(panels);
    double acc = 0.0;
    double left = f(a);
    if (!std::isfinite(left)) {
        throw std::runtime_error("integrate: non-finite integrand value");
    }
    for (std::size_t k = 0; k < panels; ++k) {
        const double x0 = a + h * static_cast<double>(k);
        const double x1 = (k + 1 == panels) ? b : a + h * static_cast<double>(k + 1);
        const double mid = f(0.5 * (x0 + x1));
        const double right = f(x1);
        if (!std::isfinite(mid) || !std::isfinite(right)) {
            throw std::runtime_error("integrate: non-finite integrand value");
        }
        acc += (x1 - x0) / 6.0 * (left + 4.0 * mid + right);
        left = right;
    }
    return acc;
}

/// Simpson quadrature of exp(log_f) carried out in log space: returns
/// log of the integral. Underflow-safe for integrands whose peak value
/// is far below exp(-745); log_f values of -inf are treated as zeros of
/// the integrand.
template <class F>
double integrate_log(F&& log_f, double a, double b, std::size_t panels) {
    if (!(a <= b)) {
        throw std::invalid_argument("integrate_log: requires a <= b");
    }
    if (panels < 1) {
        throw std::invalid_argument("integrate_log: requires panels >= 1");
    }
    if (a == b) {
        return -std::numeric_limits<double>::infinity();
    }
    const std::size_t n = 2 * panels + 1;
    std::vector<double> logv(n);
    const double h = (b - a) / static_cast<double>(2 * panels);
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double x = (i + 1 == n) ? b : a + h * static_cast<double>(i);
        const double lv = log_f(x);
        if (std::isnan(lv) || lv == std::numeric_limits<double>::infinity()) {
            throw std::runtime_error("integrate_log: invalid integrand value");
        }
        logv[i] = lv;
        peak = std::max(peak, lv);
    }
    if (peak == -std::numeric_limits<double>::infinity()) {
        return peak;  // integrand identically zero on the grid
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < panels; ++k) {
        const double f0 = std::exp(logv[2 * k] - peak);
        const double fm = std::exp(logv[2 * k + 1] - peak);
        const double f1 = std::exp(logv[2 * k + 2] - peak);
        acc += (f0 + 4.0 * fm + f1);
    }
    const double panel_width = (b - a) / static_cast<double>(panels);
    return peak + std::log(acc * panel_width / 6.0);
}

}  // namespace featkd

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "featkd/matrix.hpp"

namespace featkd {

/// One logging row of the combined objective: total = ce + beta * (mse + lsh).
struct LossReport {
    double total = 0.0;
    double ce = 0.0;
    double mse = 0.0;
    double lsh = 0.0;
    double beta = 0.0;
};

/// Per-sample feature distance: (1/D) * ||f_t - f_s||^2. Batch averaging is
/// the caller's job.
inline double mse_feature_loss(const Vector& f_t, const Vector& f_s) {
    if (f_t.size() != f_s.size() || f_t.empty()) {
        throw std::invalid_argument("mse_feature_loss: dimension mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < f_t.size(); ++i) {
        const double d = f_t[i] - f_s[i];
        acc += d * d;
    }
    return acc / static_cast<double>(f_t.size());
}

/// d mse / d f_s = (2/D) (f_s - f_t). The teacher side gets no gradient.
inline Vector mse_feature_grad(const Vector& f_t, const Vector& f_s) {
    if (f_t.size() != f_s.size() || f_t.empty()) {
        throw std::invalid_argument("mse_feature_grad: dimension mismatch");
    }
    Vector g(f_t.size());
    const double w = 2.0 / static_cast<double>(f_t.size());
    for (std::size_t i = 0; i < f_t.size(); ++i) {
        g[i] = w * (f_s[i] - f_t[i]);
    }
    return g;
}

struct SoftmaxCe {
    double loss = 0.0;
    Vector grad;  // softmax(logits) - onehot(label)
};

/// Cross entropy of logits against an integer label, stabilized by max
/// subtraction. Returns loss and gradient in one pass.
inline SoftmaxCe softmax_cross_entropy(const Vector& logits, std::size_t label) {
    if (label >= logits.size()) {
        throw std::invalid_argument("softmax_cross_entropy: label out of range");
    }
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) {
        z += std::exp(l - m);
    }
    const double log_z = std::log(z);
    SoftmaxCe out;
    out.loss = log_z - (logits[label] - m);
    out.grad.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out.grad[i] = std::exp(logits[i] - m) / z - (i == label ? 1.0 : 0.0);
    }
    return out;
}

inline LossReport combined_loss(double ce, double mse, double lsh, double beta) {
    if (beta < 0.0) {
        throw std::invalid_argument("combined_loss: beta must be >= 0");
    }
    LossReport r;
    r.ce = ce;
    r.mse = mse;
    r.lsh = lsh;
    r.beta = beta;
    r.total = ce + beta * (mse + lsh);
    return r;
}

}  // namespace featkd

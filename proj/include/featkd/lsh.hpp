#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "featkd/matrix.hpp"
#include "featkd/rng.hpp"
#include "featkd/special.hpp"

namespace featkd {

/// Bias initialization strategy for the hash module: zero bias, or the
/// negated mean/median of the teacher projections, which shifts each
/// hyperplane through that statistic and balances the per-function binary
/// classification. Median is the default.
enum class BiasInit { Zero, Mean, Median };

/// Random-projection hash module: codes are sign_step(W^T f + b) with W drawn
/// once from Normal(0, std_hash^2). Frozen after initialization; every
/// operation below takes it by const reference.
struct HashModule {
    Matrix weights;        // D x N
    Vector bias;           // length N
    std::size_t n_hash = 0;
    double std_hash = 0.0;
    std::uint64_t seed = 0;

    std::size_t feature_dim() const { return weights.rows(); }

    bool operator==(const HashModule& other) const {
        return weights == other.weights && bias == other.bias && n_hash == other.n_hash &&
               std_hash == other.std_hash && seed == other.seed;
    }
};

inline HashModule init_hash_module(std::size_t feature_dim, std::size_t n_hash, double std_hash,
                                   RngStream& rng) {
    if (feature_dim < 1 || n_hash < 1 || !(std_hash > 0.0)) {
        throw std::invalid_argument("init_hash_module: invalid dimensions or std");
    }
    HashModule m;
    m.seed = rng.seed();
    m.weights = gaussian_matrix(feature_dim, n_hash, 0.0, std_hash, rng);
    m.bias.assign(n_hash, 0.0);
    m.n_hash = n_hash;
    m.std_hash = std_hash;
    return m;
}

namespace detail {

inline double median_inplace(Vector& v) {
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double hi = v[mid];
    if (n % 2 == 1) {
        return hi;
    }
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Returns a copy of the module with bias set from the teacher feature set.
/// For hash function j the projection statistic is over w_j^T f_i; the stored
/// bias is its negation, so the statistic itself becomes the decision
/// threshold of Eq-style sign hashing.
inline HashModule init_bias(const HashModule& module, const std::vector<Vector>& teacher_features,
                            BiasInit strategy) {
    HashModule out = module;
    if (strategy == BiasInit::Zero) {
        out.bias.assign(module.n_hash, 0.0);
        return out;
    }
    if (teacher_features.empty()) {
        throw std::runtime_error("init_bias: mean/median strategy needs a nonempty feature set");
    }
    for (const Vector& f : teacher_features) {
        if (f.size() != module.feature_dim()) {
            throw std::invalid_argument("init_bias: feature dimension mismatch");
        }
    }
    const std::size_t m = teacher_features.size();
    Vector projections(m);
    for (std::size_t j = 0; j < module.n_hash; ++j) {
        for (std::size_t i = 0; i < m; ++i) {
            double acc = 0.0;
            const Vector& f = teacher_features[i];
            for (std::size_t d = 0; d < f.size(); ++d) {
                acc += module.weights(d, j) * f[d];
            }
            projections[i] = acc;
        }
        if (strategy == BiasInit::Mean) {
            double sum = 0.0;
            for (double p : projections) {
                sum += p;
            }
            out.bias[j] = -(sum / static_cast<double>(m));
        } else {
            out.bias[j] = -detail::median_inplace(projections);
        }
    }
    return out;
}

/// Binary hash codes h_j = sign_step(w_j^T f + b_j), length N.
inline Vector hash_codes(const HashModule& module, const Vector& f) {
    if (f.size() != module.feature_dim()) {
        throw std::invalid_argument("hash_codes: feature dimension mismatch");
    }
    Vector pre = tmatvec(module.weights, f);
    for (std::size_t j = 0; j < module.n_hash; ++j) {
        pre[j] = sign_step(pre[j] + module.bias[j]);
    }
    return pre;
}

namespace detail {

// Probabilities are clamped before the logs so the loss stays finite under
// saturation; the gradient uses the raw sigmoid.
inline constexpr double kProbClamp = 1e-12;

inline double bce_term(double h, double p) {
    const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    return -(h * std::log(pc) + (1.0 - h) * std::log(1.0 - pc));
}

}  // namespace detail

/// Per-sample hash mimicking loss: binary cross entropy of the student's soft
/// codes sigma(W^T f_s + b) against the teacher's hard codes sign_step(W^T f_t
/// + b), averaged over the N hash functions. Batch averaging is the caller's
/// job.
inline double lsh_loss(const HashModule& module, const Vector& f_t, const Vector& f_s) {
    if (f_t.size() != module.feature_dim() || f_s.size() != module.feature_dim()) {
        throw std::invalid_argument("lsh_loss: feature dimension mismatch");
    }
    const Vector pre_t = tmatvec(module.weights, f_t);
    const Vector pre_s = tmatvec(module.weights, f_s);
    double acc = 0.0;
    for (std::size_t j = 0; j < module.n_hash; ++j) {
        const double h = sign_step(pre_t[j] + module.bias[j]);
        const double p = sigmoid(pre_s[j] + module.bias[j]);
        acc += detail::bce_term(h, p);
    }
    return acc / static_cast<double>(module.n_hash);
}

/// Analytic gradient of lsh_loss with respect to f_s: (1/N) * W * (p - h).
/// The teacher feature receives no gradient.
inline Vector lsh_loss_grad(const HashModule& module, const Vector& f_t, const Vector& f_s) {
    if (f_t.size() != module.feature_dim() || f_s.size() != module.feature_dim()) {
        throw std::invalid_argument("lsh_loss_grad: feature dimension mismatch");
    }
    const Vector pre_t = tmatvec(module.weights, f_t);
    const Vector pre_s = tmatvec(module.weights, f_s);
    Vector delta(module.n_hash);
    for (std::size_t j = 0; j < module.n_hash; ++j) {
        const double h = sign_step(pre_t[j] + module.bias[j]);
        const double p = sigmoid(pre_s[j] + module.bias[j]);
        delta[j] = p - h;
    }
    Vector grad = matvec(module.weights, delta);
    const double inv_n = 1.0 / static_cast<double>(module.n_hash);
    for (double& g : grad) {
        g *= inv_n;
    }
    return grad;
}

/// Loss value given precomputed teacher codes, used when the supervision side
/// is held fixed while the student side varies.
inline double lsh_loss_given_codes(const HashModule& module, const Vector& codes,
                                   const Vector& f_s) {
    if (codes.size() != module.n_hash || f_s.size() != module.feature_dim()) {
        throw std::invalid_argument("lsh_loss_given_codes: dimension mismatch");
    }
    const Vector pre_s = tmatvec(module.weights, f_s);
    double acc = 0.0;
    for (std::size_t j = 0; j < module.n_hash; ++j) {
        acc += detail::bce_term(codes[j], sigmoid(pre_s[j] + module.bias[j]));
    }
    return acc / static_cast<double>(module.n_hash);
}

}  // namespace featkd

#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "featkd/matrix.hpp"
#include "featkd/rng.hpp"

namespace featkd {

/// Fully connected layer, forward(f) = W^T f + b with W of shape
/// in_dim x out_dim.
struct LinearLayer {
    Matrix weights;
    Vector bias;

    std::size_t in_dim() const { return weights.rows(); }
    std::size_t out_dim() const { return weights.cols(); }

    bool operator==(const LinearLayer& other) const {
        return weights == other.weights && bias == other.bias;
    }
};

inline Vector linear_forward(const LinearLayer& layer, const Vector& x) {
    if (x.size() != layer.in_dim()) {
        throw std::invalid_argument("linear_forward: dimension mismatch");
    }
    Vector y = tmatvec(layer.weights, x);
    for (std::size_t j = 0; j < y.size(); ++j) {
        y[j] += layer.bias[j];
    }
    return y;
}

/// Multilayer perceptron: ReLU hidden stack, an optional linear embedding
/// (no activation between it and the classifier), and a linear classifier.
/// The penultimate feature is the embedding output when the embedding is
/// present, else the last hidden activation (or the input when there are no
/// hidden layers).
struct Mlp {
    std::vector<LinearLayer> hidden;
    std::optional<LinearLayer> embedding;
    LinearLayer classifier;

    std::size_t input_dim() const {
        if (!hidden.empty()) return hidden.front().in_dim();
        if (embedding) return embedding->in_dim();
        return classifier.in_dim();
    }
    std::size_t feature_dim() const { return classifier.in_dim(); }
    std::size_t n_classes() const { return classifier.out_dim(); }

    bool operator==(const Mlp& other) const {
        return hidden == other.hidden && embedding == other.embedding &&
               classifier == other.classifier;
    }
};

/// Everything backward() needs: inputs and pre/post activations per hidden
/// layer, the penultimate feature, and the logits.
struct ForwardTrace {
    Vector input;
    std::vector<Vector> hidden_pre;
    std::vector<Vector> hidden_act;
    Vector feature;
    Vector logits;
};

inline ForwardTrace forward(const Mlp& model, const Vector& x) {
    if (x.size() != model.input_dim()) {
        throw std::invalid_argument("forward: input dimension mismatch");
    }
    ForwardTrace trace;
    trace.input = x;
    const Vector* cur = &trace.input;
    trace.hidden_pre.reserve(model.hidden.size());
    trace.hidden_act.reserve(model.hidden.size());
    for (const LinearLayer& layer : model.hidden) {
        trace.hidden_pre.push_back(linear_forward(layer, *cur));
        Vector act = trace.hidden_pre.back();
        for (double& v : act) {
            v = v > 0.0 ? v : 0.0;
        }
        trace.hidden_act.push_back(std::move(act));
        cur = &trace.hidden_act.back();
    }
    trace.feature = model.embedding ? linear_forward(*model.embedding, *cur) : *cur;
    trace.logits = linear_forward(model.classifier, trace.feature);
    return trace;
}

/// Parameter gradients, same shapes as the model's layers.
struct MlpGrads {
    std::vector<LinearLayer> hidden;
    std::optional<LinearLayer> embedding;
    LinearLayer classifier;
};

inline MlpGrads zero_grads(const Mlp& model) {
    MlpGrads g;
    auto zeros_like = [](const LinearLayer& l) {
        return LinearLayer{Matrix(l.in_dim(), l.out_dim(), 0.0), Vector(l.out_dim(), 0.0)};
    };
    for (const LinearLayer& l : model.hidden) {
        g.hidden.push_back(zeros_like(l));
    }
    if (model.embedding) {
        g.embedding = zeros_like(*model.embedding);
    }
    g.classifier = zeros_like(model.classifier);
    return g;
}

namespace detail {

// y = W^T x + b with upstream dy: accumulates dW += x dy^T, db += dy and
// returns dx = W dy.
inline Vector linear_backward(const LinearLayer& layer, const Vector& x, const Vector& dy,
                              LinearLayer& grad) {
    for (std::size_t i = 0; i < layer.in_dim(); ++i) {
        const double xi = x[i];
        for (std::size_t j = 0; j < layer.out_dim(); ++j) {
            grad.weights(i, j) += xi * dy[j];
        }
    }
    for (std::size_t j = 0; j < layer.out_dim(); ++j) {
        grad.bias[j] += dy[j];
    }
    return matvec(layer.weights, dy);
}

}  // namespace detail

/// Manual backprop with two supervision entry points: dlogits at the
/// classifier output and dfeature injected at the penultimate feature, from
/// where it flows through the embedding (when present) into the backbone.
/// Pass an empty dfeature for a pure classification gradient. Gradients are
/// accumulated into `grads`, so one accumulator can serve a whole batch.
inline void backward_accumulate(const Mlp& model, const ForwardTrace& trace, const Vector& dlogits,
                                const Vector& dfeature, MlpGrads& grads) {
    if (dlogits.size() != model.n_classes()) {
        throw std::invalid_argument("backward: dlogits dimension mismatch");
    }
    if (!dfeature.empty() && dfeature.size() != model.feature_dim()) {
        throw std::invalid_argument("backward: dfeature dimension mismatch");
    }
    if (trace.hidden_act.size() != model.hidden.size()) {
        throw std::invalid_argument("backward: trace does not match model");
    }

    const Vector& backbone_out =
        model.hidden.empty() ? trace.input : trace.hidden_act.back();

    Vector dfeat = detail::linear_backward(model.classifier, trace.feature, dlogits,
                                           grads.classifier);
    if (!dfeature.empty()) {
        axpy(dfeat, dfeature, 1.0);
    }

    Vector dcur;
    if (model.embedding) {
        dcur = detail::linear_backward(*model.embedding, backbone_out, dfeat, *grads.embedding);
    } else {
        dcur = std::move(dfeat);
    }

    for (std::size_t li = model.hidden.size(); li-- > 0;) {
        // ReLU mask on the pre-activation; the derivative at exactly 0 is 0.
        for (std::size_t j = 0; j < dcur.size(); ++j) {
            if (!(trace.hidden_pre[li][j] > 0.0)) {
                dcur[j] = 0.0;
            }
        }
        const Vector& layer_in = (li == 0) ? trace.input : trace.hidden_act[li - 1];
        dcur = detail::linear_backward(model.hidden[li], layer_in, dcur, grads.hidden[li]);
    }
}

inline MlpGrads backward(const Mlp& model, const ForwardTrace& trace, const Vector& dlogits,
                         const Vector& dfeature) {
    MlpGrads grads = zero_grads(model);
    backward_accumulate(model, trace, dlogits, dfeature, grads);
    return grads;
}

/// Folds a linear embedding into the classifier that follows it:
/// weights = W1 W2, bias = W2^T b1 + b2. Exact in exact arithmetic, so the
/// merged layer predicts identically to the two-layer composition.
inline LinearLayer merge_embedding(const LinearLayer& fc1, const LinearLayer& fc2) {
    if (fc1.out_dim() != fc2.in_dim()) {
        throw std::invalid_argument("merge_embedding: dimension mismatch");
    }
    LinearLayer merged;
    merged.weights = matmul(fc1.weights, fc2.weights);
    merged.bias = add(tmatvec(fc2.weights, fc1.bias), fc2.bias);
    return merged;
}

inline double max_identity_residual(const Matrix& m) {
    double worst = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const double target = (i == j) ? 1.0 : 0.0;
            worst = std::max(worst, std::fabs(m(i, j) - target));
        }
    }
    return worst;
}

/// Rotates a classifier's feature space: returns (classifier with weights
/// R W and unchanged bias, features mapped to R f). Predictions W^T f + b are
/// invariant. R must be orthogonal to 1e-10.
inline std::pair<LinearLayer, std::vector<Vector>> apply_rotation(
    const LinearLayer& classifier, const std::vector<Vector>& features, const Matrix& rotation) {
    const std::size_t d = classifier.in_dim();
    if (rotation.rows() != d || rotation.cols() != d) {
        throw std::invalid_argument("apply_rotation: rotation must be square of feature dim");
    }
    if (max_identity_residual(matmul(transpose(rotation), rotation)) > 1e-10) {
        throw std::invalid_argument("apply_rotation: matrix is not orthogonal");
    }
    LinearLayer rotated{matmul(rotation, classifier.weights), classifier.bias};
    std::vector<Vector> rotated_features;
    rotated_features.reserve(features.size());
    for (const Vector& f : features) {
        rotated_features.push_back(matvec(rotation, f));
    }
    return {std::move(rotated), std::move(rotated_features)};
}

/// Haar-like random orthogonal matrix: modified Gram-Schmidt on a Gaussian
/// matrix with a second orthogonalization pass, columns sign-fixed so the
/// implicit triangular factor has a positive diagonal.
inline Matrix random_orthogonal(std::size_t dim, RngStream& rng) {
    if (dim < 1) {
        throw std::invalid_argument("random_orthogonal: requires dim >= 1");
    }
    Matrix a = gaussian_matrix(dim, dim, 0.0, 1.0, rng);
    Matrix q(dim, dim, 0.0);
    for (std::size_t j = 0; j < dim; ++j) {
        Vector col(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            col[i] = a(i, j);
        }
        const Vector original = col;
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t k = 0; k < j; ++k) {
                double proj = 0.0;
                for (std::size_t i = 0; i < dim; ++i) {
                    proj += q(i, k) * col[i];
                }
                for (std::size_t i = 0; i < dim; ++i) {
                    col[i] -= proj * q(i, k);
                }
            }
        }
        double nrm = norm2(col);
        if (!(nrm > 0.0)) {
            // Gaussian columns are independent with probability one; a rank
            // deficiency here means something upstream is broken.
            throw std::runtime_error("random_orthogonal: degenerate sample");
        }
        double sign_fix = dot(original, col) < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < dim; ++i) {
            q(i, j) = sign_fix * col[i] / nrm;
        }
    }
    return q;
}

/// Builds an MLP with fan-in-scaled Gaussian weights (std = 1/sqrt(in_dim))
/// and zero biases. `hidden_dims` lists the widths of the ReLU stack;
/// `embedding_out` (when nonzero) appends a linear embedding mapping the last
/// backbone width to that dimension.
inline Mlp make_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden_dims,
                    std::size_t embedding_out, std::size_t n_classes, RngStream& rng) {
    if (input_dim < 1 || n_classes < 1) {
        throw std::invalid_argument("make_mlp: invalid dimensions");
    }
    Mlp model;
    std::size_t cur = input_dim;
    for (std::size_t width : hidden_dims) {
        if (width < 1) {
            throw std::invalid_argument("make_mlp: invalid hidden width");
        }
        const double std = 1.0 / std::sqrt(static_cast<double>(cur));
        model.hidden.push_back(
            LinearLayer{gaussian_matrix(cur, width, 0.0, std, rng), Vector(width, 0.0)});
        cur = width;
    }
    if (embedding_out > 0) {
        const double std = 1.0 / std::sqrt(static_cast<double>(cur));
        model.embedding =
            LinearLayer{gaussian_matrix(cur, embedding_out, 0.0, std, rng), Vector(embedding_out, 0.0)};
        cur = embedding_out;
    }
    const double std = 1.0 / std::sqrt(static_cast<double>(cur));
    model.classifier =
        LinearLayer{gaussian_matrix(cur, n_classes, 0.0, std, rng), Vector(n_classes, 0.0)};
    return model;
}

/// Empirical standard deviation of the classifier weight entries around their
/// mean. This is the std_t statistic used as an alternative hash sampler std.
inline double classifier_weight_std(const Mlp& model) {
    const Vector& w = model.classifier.weights.data();
    if (w.empty()) {
        throw std::invalid_argument("classifier_weight_std: empty classifier");
    }
    double mean = 0.0;
    for (double x : w) {
        mean += x;
    }
    mean /= static_cast<double>(w.size());
    double var = 0.0;
    for (double x : w) {
        var += (x - mean) * (x - mean);
    }
    return std::sqrt(var / static_cast<double>(w.size()));
}

namespace detail {

template <class LayerFn>
void for_each_layer(Mlp& model, LayerFn&& fn) {
    for (LinearLayer& l : model.hidden) {
        fn(l);
    }
    if (model.embedding) {
        fn(*model.embedding);
    }
    fn(model.classifier);
}

template <class LayerFn>
void for_each_layer(const Mlp& model, LayerFn&& fn) {
    for (const LinearLayer& l : model.hidden) {
        fn(l);
    }
    if (model.embedding) {
        fn(*model.embedding);
    }
    fn(model.classifier);
}

}  // namespace detail

/// Flattens every trainable parameter into one vector, hidden layers first,
/// then the embedding, then the classifier; weights row-major before bias.
inline Vector collect_parameters(const Mlp& model) {
    Vector flat;
    detail::for_each_layer(model, [&](const LinearLayer& l) {
        flat.insert(flat.end(), l.weights.data().begin(), l.weights.data().end());
        flat.insert(flat.end(), l.bias.begin(), l.bias.end());
    });
    return flat;
}

inline void assign_parameters(Mlp& model, const Vector& flat) {
    std::size_t pos = 0;
    detail::for_each_layer(model, [&](LinearLayer& l) {
        for (double& w : l.weights.data()) {
            w = flat.at(pos++);
        }
        for (double& b : l.bias) {
            b = flat.at(pos++);
        }
    });
    if (pos != flat.size()) {
        throw std::invalid_argument("assign_parameters: size mismatch");
    }
}

}  // namespace featkd

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "featkd/rng.hpp"

namespace featkd {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles. Small and allocation-friendly; this
/// library never needs BLAS-grade performance.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    Vector& data() { return data_; }
    const Vector& data() const { return data_; }

    bool operator==(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Vector data_;
};

inline double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("dot: size mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

inline double norm2(const Vector& v) {
    return std::sqrt(dot(v, v));
}

inline Vector add(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("add: size mismatch");
    }
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = a[i] + b[i];
    }
    return out;
}

inline Vector sub(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("sub: size mismatch");
    }
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = a[i] - b[i];
    }
    return out;
}

inline Vector scale(const Vector& v, double s) {
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = s * v[i];
    }
    return out;
}

/// acc += s * v
inline void axpy(Vector& acc, const Vector& v, double s) {
    if (acc.size() != v.size()) {
        throw std::invalid_argument("axpy: size mismatch");
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        acc[i] += s * v[i];
    }
}

/// y = A x  (length rows)
inline Vector matvec(const Matrix& a, const Vector& x) {
    if (a.cols() != x.size()) {
        throw std::invalid_argument("matvec: dimension mismatch");
    }
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) {
            acc += a(i, j) * x[j];
        }
        y[i] = acc;
    }
    return y;
}

/// y = A^T x  (length cols)
inline Vector tmatvec(const Matrix& a, const Vector& x) {
    if (a.rows() != x.size()) {
        throw std::invalid_argument("tmatvec: dimension mismatch");
    }
    Vector y(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double xi = x[i];
        for (std::size_t j = 0; j < a.cols(); ++j) {
            y[j] += a(i, j) * xi;
        }
    }
    return y;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("matmul: dimension mismatch");
    }
    Matrix c(a.rows(), b.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) {
                c(i, j) += aik * b(k, j);
            }
        }
    }
    return c;
}

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            t(j, i) = a(i, j);
        }
    }
    return t;
}

inline bool all_finite(const Vector& v) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            return false;
        }
    }
    return true;
}

inline bool all_finite(const Matrix& m) {
    return all_finite(m.data());
}

/// Matrix with i.i.d. Normal(mean, std^2) entries, filled row-major so the
/// layout is part of the reproducibility contract.
inline Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double mean, double std,
                              RngStream& rng) {
    if (std < 0.0) {
        throw std::invalid_argument("gaussian_matrix: std must be >= 0");
    }
    Matrix m(rows, cols);
    for (double& x : m.data()) {
        x = rng.next_gaussian(mean, std);
    }
    return m;
}

inline Vector gaussian_vector(std::size_t n, double mean, double std, RngStream& rng) {
    if (std < 0.0) {
        throw std::invalid_argument("gaussian_vector: std must be >= 0");
    }
    Vector v(n);
    for (double& x : v) {
        x = rng.next_gaussian(mean, std);
    }
    return v;
}

}  // namespace featkd

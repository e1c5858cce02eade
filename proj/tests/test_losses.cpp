#include "doctest.h"

#include <cmath>

#include "featkd/grad_check.hpp"
#include "featkd/losses.hpp"
#include "featkd/rng.hpp"

using namespace featkd;

TEST_CASE("mse_feature_loss: anchors") {
    const Vector a{0.4, -1.2, 3.0};
    CHECK(mse_feature_loss(a, a) == 0.0);
    CHECK(mse_feature_loss(Vector{1.0, 0.0}, Vector{0.0, 1.0}) == doctest::Approx(1.0));
    CHECK(mse_feature_loss(Vector(4, 0.0), Vector(4, 1.0)) == doctest::Approx(1.0));
    CHECK_THROWS_AS(mse_feature_loss(Vector{1.0}, Vector{1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("mse_feature_loss: nonnegative, zero only at equality, symmetric") {
    RngStream rng(5);
    for (int t = 0; t < 40; ++t) {
        const Vector u = gaussian_vector(6, 0.0, 1.0, rng);
        const Vector v = gaussian_vector(6, 0.0, 1.0, rng);
        const double luv = mse_feature_loss(u, v);
        CHECK(luv >= 0.0);
        CHECK(luv == doctest::Approx(mse_feature_loss(v, u)).epsilon(1e-15));
        if (u != v) {
            CHECK(luv > 0.0);
        }
    }
}

TEST_CASE("mse_feature_grad: anchors and antisymmetry") {
    const Vector t{1.0, 0.0};
    const Vector s{0.0, 1.0};
    const Vector g = mse_feature_grad(t, s);
    CHECK(g[0] == doctest::Approx(-1.0));
    CHECK(g[1] == doctest::Approx(1.0));
    const Vector zero = mse_feature_grad(t, t);
    CHECK(zero[0] == 0.0);
    CHECK(zero[1] == 0.0);
    const Vector swapped = mse_feature_grad(s, t);
    CHECK(swapped[0] == doctest::Approx(-g[0]));
    CHECK(swapped[1] == doctest::Approx(-g[1]));
}

TEST_CASE("mse_feature_grad: matches finite differences") {
    RngStream rng(17);
    for (int t = 0; t < 20; ++t) {
        const Vector f_t = gaussian_vector(8, 0.0, 2.0, rng);
        const Vector f_s = gaussian_vector(8, 0.0, 2.0, rng);
        const Vector analytic = mse_feature_grad(f_t, f_s);
        const Vector numeric = finite_diff_grad(
            [&](const Vector& v) { return mse_feature_loss(f_t, v); }, f_s, 1e-6);
        for (std::size_t i = 0; i < analytic.size(); ++i) {
            CHECK(analytic[i] == doctest::Approx(numeric[i]).epsilon(1e-8).scale(1.0));
        }
    }
}

TEST_CASE("softmax_cross_entropy: anchors") {
    {
        const SoftmaxCe r = softmax_cross_entropy(Vector{0.0, 0.0}, 0);
        CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
        CHECK(r.grad[0] == doctest::Approx(-0.5));
        CHECK(r.grad[1] == doctest::Approx(0.5));
    }
    {
        const SoftmaxCe r = softmax_cross_entropy(Vector{10.0, -10.0}, 0);
        CHECK(r.loss == doctest::Approx(2.0611536900435727e-09).epsilon(1e-6));
    }
    CHECK_THROWS_AS(softmax_cross_entropy(Vector{1.0, 2.0}, 2), std::invalid_argument);
}

TEST_CASE("softmax_cross_entropy: gradient sums to zero and matches finite differences") {
    RngStream rng(23);
    for (int t = 0; t < 20; ++t) {
        const Vector logits = gaussian_vector(5, 0.0, 3.0, rng);
        const std::size_t label = static_cast<std::size_t>(rng.next_below(5));
        const SoftmaxCe r = softmax_cross_entropy(logits, label);
        double sum = 0.0;
        for (double g : r.grad) {
            sum += g;
        }
        CHECK(sum == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
        const Vector numeric = finite_diff_grad(
            [&](const Vector& v) { return softmax_cross_entropy(v, label).loss; }, logits, 1e-6);
        for (std::size_t i = 0; i < 5; ++i) {
            CHECK(r.grad[i] == doctest::Approx(numeric[i]).epsilon(1e-6).scale(1.0));
        }
    }
}

TEST_CASE("softmax_cross_entropy: stable for huge logits") {
    const SoftmaxCe r = softmax_cross_entropy(Vector{1000.0, 999.0, -1000.0}, 1);
    CHECK(std::isfinite(r.loss));
    CHECK(r.loss == doctest::Approx(std::log(1.0 + std::exp(1.0))).epsilon(1e-9));
}

TEST_CASE("combined_loss: aggregation and linearity") {
    CHECK(combined_loss(1.0, 0.2, 0.3, 6.0).total == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(combined_loss(0.7, 0.2, 0.3, 0.0).total == doctest::Approx(0.7));
    CHECK(combined_loss(0.0, 0.0, 0.0, 12.0).total == 0.0);
    CHECK_THROWS_AS(combined_loss(1.0, 1.0, 1.0, -0.5), std::invalid_argument);

    const LossReport r = combined_loss(0.4, 0.5, 0.6, 2.0);
    CHECK(r.total == doctest::Approx(r.ce + r.beta * (r.mse + r.lsh)).epsilon(1e-15));
    // linear in each component
    CHECK(combined_loss(2 * 0.4, 0.5, 0.6, 2.0).total - r.total == doctest::Approx(0.4));
    CHECK(combined_loss(0.4, 2 * 0.5, 0.6, 2.0).total - r.total == doctest::Approx(2.0 * 0.5));
    CHECK(combined_loss(0.4, 0.5, 0.6, 4.0).total - r.total == doctest::Approx(2.0 * (0.5 + 0.6)));
}

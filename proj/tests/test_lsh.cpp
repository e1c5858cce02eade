#include "doctest.h"

#include <cmath>
#include <limits>

#include "featkd/grad_check.hpp"
#include "featkd/lsh.hpp"
#include "featkd/rng.hpp"

using namespace featkd;

namespace {

Matrix identity(std::size_t n) {
    Matrix m(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

HashModule identity_module(std::size_t n) {
    HashModule m;
    m.weights = identity(n);
    m.bias.assign(n, 0.0);
    m.n_hash = n;
    m.std_hash = 1.0;
    return m;
}

}  // namespace

TEST_CASE("init_hash_module: shapes, sampling std, determinism") {
    RngStream rng(3);
    const HashModule m = init_hash_module(4, 2048, 1.0, rng);
    CHECK(m.weights.rows() == 4);
    CHECK(m.weights.cols() == 2048);
    CHECK(m.bias.size() == 2048);
    for (double b : m.bias) {
        CHECK(b == 0.0);
    }
    double mean = 0.0;
    for (double w : m.weights.data()) {
        mean += w;
    }
    mean /= static_cast<double>(m.weights.data().size());
    double var = 0.0;
    for (double w : m.weights.data()) {
        var += (w - mean) * (w - mean);
    }
    var /= static_cast<double>(m.weights.data().size());
    CHECK(std::fabs(std::sqrt(var) - 1.0) < 0.05);

    RngStream a(11);
    RngStream b(11);
    CHECK(init_hash_module(8, 16, 0.5, a) == init_hash_module(8, 16, 0.5, b));

    RngStream c(1);
    CHECK_THROWS_AS(init_hash_module(0, 4, 1.0, c), std::invalid_argument);
    CHECK_THROWS_AS(init_hash_module(4, 4, 0.0, c), std::invalid_argument);
}

TEST_CASE("init_hash_module: the vgg13-teacher setting stays calibrated") {
    RngStream rng(7);
    const HashModule m = init_hash_module(512, 2048, 0.0749, rng);
    double var = 0.0;
    for (double w : m.weights.data()) {
        var += w * w;
    }
    var /= static_cast<double>(m.weights.data().size());
    CHECK(std::sqrt(var) == doctest::Approx(0.0749).epsilon(0.01));
}

TEST_CASE("init_bias: zero strategy ignores features") {
    RngStream rng(5);
    HashModule m = init_hash_module(3, 8, 1.0, rng);
    for (double& b : m.bias) {
        b = 9.0;  // garbage that Zero must wipe
    }
    const HashModule z = init_bias(m, {}, BiasInit::Zero);
    for (double b : z.bias) {
        CHECK(b == 0.0);
    }
    CHECK_THROWS_AS(init_bias(m, {}, BiasInit::Median), std::runtime_error);
    CHECK_THROWS_AS(init_bias(m, {}, BiasInit::Mean), std::runtime_error);
}

TEST_CASE("init_bias: single feature with median pins its code to zero") {
    RngStream rng(19);
    const HashModule m = init_hash_module(5, 12, 1.0, rng);
    const Vector f = gaussian_vector(5, 0.0, 1.0, rng);
    const HashModule biased = init_bias(m, {f}, BiasInit::Median);
    for (std::size_t j = 0; j < biased.n_hash; ++j) {
        double proj = 0.0;
        for (std::size_t d = 0; d < 5; ++d) {
            proj += biased.weights(d, j) * f[d];
        }
        CHECK(proj + biased.bias[j] == 0.0);
    }
    const Vector codes = hash_codes(biased, f);
    for (double h : codes) {
        CHECK(h == 0.0);
    }
}

TEST_CASE("init_bias: median splits a symmetric 101-feature line exactly 50/50") {
    RngStream rng(29);
    const HashModule m = init_hash_module(4, 32, 1.0, rng);
    const Vector direction = gaussian_vector(4, 0.0, 1.0, rng);
    std::vector<Vector> features;
    for (int k = -50; k <= 50; ++k) {
        features.push_back(scale(direction, static_cast<double>(k)));
    }
    const HashModule biased = init_bias(m, features, BiasInit::Median);
    for (std::size_t j = 0; j < biased.n_hash; ++j) {
        std::size_t ones = 0;
        for (const Vector& f : features) {
            ones += hash_codes(biased, f)[j] == 1.0 ? 1 : 0;
        }
        CHECK(ones == 50);
    }
}

TEST_CASE("init_bias: mean strategy centers the mean projection") {
    RngStream rng(31);
    const HashModule m = init_hash_module(6, 16, 1.0, rng);
    std::vector<Vector> features;
    for (int i = 0; i < 9; ++i) {
        features.push_back(gaussian_vector(6, 0.5, 2.0, rng));
    }
    const HashModule biased = init_bias(m, features, BiasInit::Mean);
    for (std::size_t j = 0; j < biased.n_hash; ++j) {
        double mean_pre = 0.0;
        for (const Vector& f : features) {
            double proj = 0.0;
            for (std::size_t d = 0; d < 6; ++d) {
                proj += biased.weights(d, j) * f[d];
            }
            mean_pre += proj + biased.bias[j];
        }
        CHECK(mean_pre / 9.0 == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("hash_codes: identity weights reduce to coordinate signs") {
    const HashModule m = identity_module(3);
    const Vector h = hash_codes(m, Vector{3.0, -1.0, 2.0});
    CHECK(h == Vector{1.0, 0.0, 1.0});
    CHECK(hash_codes(m, Vector{0.0, 0.0, 0.0}) == Vector{0.0, 0.0, 0.0});
    CHECK_THROWS_AS(hash_codes(m, Vector{1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("hash_codes: zero bias makes codes scale invariant") {
    RngStream rng(37);
    const HashModule m = init_hash_module(7, 64, 1.0, rng);
    for (int t = 0; t < 20; ++t) {
        const Vector f = gaussian_vector(7, 0.0, 1.0, rng);
        const Vector base = hash_codes(m, f);
        for (double s : {0.5, 3.0}) {
            CHECK(hash_codes(m, scale(f, s)) == base);
        }
    }
}

TEST_CASE("lsh_loss: hand-computed one-dimensional anchors") {
    const HashModule m = identity_module(1);
    CHECK(lsh_loss(m, Vector{2.0}, Vector{0.0}) ==
          doctest::Approx(0.6931471805599453).epsilon(1e-12));
    CHECK(lsh_loss(m, Vector{2.0}, Vector{2.0}) ==
          doctest::Approx(0.1269280110429726).epsilon(1e-12));
    CHECK(lsh_loss(m, Vector{-1.0}, Vector{-3.0}) ==
          doctest::Approx(0.04858735157374196).epsilon(1e-12));
    CHECK_THROWS_AS(lsh_loss(m, Vector{1.0, 2.0}, Vector{1.0}), std::invalid_argument);
}

TEST_CASE("lsh_loss: finite and nonnegative even under saturation") {
    const HashModule m = identity_module(2);
    const double l = lsh_loss(m, Vector{1.0, -1.0}, Vector{-1e9, 1e9});
    CHECK(std::isfinite(l));
    CHECK(l >= 0.0);
    RngStream rng(41);
    for (int t = 0; t < 30; ++t) {
        RngStream module_rng = rng.substream(static_cast<std::uint64_t>(t));
        const HashModule mm = init_hash_module(5, 16, 1.0, module_rng);
        const Vector f_t = gaussian_vector(5, 0.0, 3.0, rng);
        const Vector f_s = gaussian_vector(5, 0.0, 3.0, rng);
        const double loss = lsh_loss(mm, f_t, f_s);
        CHECK(std::isfinite(loss));
        CHECK(loss >= 0.0);
    }
}

TEST_CASE("lsh_loss_grad: hand anchor and saturation limit") {
    const HashModule m = identity_module(1);
    const Vector g = lsh_loss_grad(m, Vector{2.0}, Vector{0.0});
    CHECK(g[0] == doctest::Approx(-0.5).epsilon(1e-12));
    // All codes 1 and the student fully saturated: gradient vanishes.
    const HashModule m3 = identity_module(3);
    const Vector gsat = lsh_loss_grad(m3, Vector{1.0, 2.0, 3.0}, Vector{1e9, 1e9, 1e9});
    for (double v : gsat) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("lsh_loss_grad: matches finite differences on random instances") {
    RngStream rng(43);
    for (int t = 0; t < 25; ++t) {
        const std::size_t dim = 2 + rng.next_below(15);
        const std::size_t n_hash = 1 + rng.next_below(64);
        HashModule m = init_hash_module(dim, n_hash, 1.0, rng);
        // exercise nonzero bias too
        for (double& b : m.bias) {
            b = rng.next_gaussian(0.0, 0.5);
        }
        const Vector f_t = gaussian_vector(dim, 0.0, 1.0, rng);
        const Vector f_s = gaussian_vector(dim, 0.0, 1.0, rng);
        const Vector analytic = lsh_loss_grad(m, f_t, f_s);
        const Vector numeric = finite_diff_grad(
            [&](const Vector& v) { return lsh_loss(m, f_t, v); }, f_s, 1e-6);
        CHECK(gradient_rel_error(analytic, numeric) < 1e-5);
    }
}

TEST_CASE("lsh_loss: module is frozen across loss and gradient calls") {
    RngStream rng(47);
    const HashModule m = init_hash_module(6, 24, 1.0, rng);
    const HashModule before = m;
    const Vector f_t = gaussian_vector(6, 0.0, 1.0, rng);
    const Vector f_s = gaussian_vector(6, 0.0, 1.0, rng);
    (void)lsh_loss(m, f_t, f_s);
    (void)lsh_loss_grad(m, f_t, f_s);
    (void)hash_codes(m, f_t);
    CHECK(m == before);
}

TEST_CASE("lsh_loss: teacher-scale invariance with zero bias (claim property)") {
    RngStream rng(53);
    for (int t = 0; t < 50; ++t) {
        RngStream module_rng = rng.substream(100 + static_cast<std::uint64_t>(t));
        const HashModule m = init_hash_module(6, 32, 1.0, module_rng);
        const Vector f_t = gaussian_vector(6, 0.0, 1.0, rng);
        const Vector f_s = gaussian_vector(6, 0.0, 1.0, rng);
        const double s = std::pow(10.0, 2.0 * rng.next_double() - 1.0);
        CHECK(lsh_loss(m, scale(f_t, s), f_s) == lsh_loss(m, f_t, f_s));
    }
}

TEST_CASE("lsh_loss: growing an aligned student never increases the loss") {
    RngStream rng(59);
    for (int t = 0; t < 50; ++t) {
        RngStream module_rng = rng.substream(200 + static_cast<std::uint64_t>(t));
        const HashModule m = init_hash_module(5, 16, 1.0, module_rng);
        const Vector f_t = gaussian_vector(5, 0.0, 1.0, rng);
        const double c = std::pow(10.0, 2.0 * rng.next_double() - 1.0);
        const Vector f_s = scale(f_t, c);
        const double s = 1.0 + 9.0 * (1.0 - rng.next_double());
        const double base = lsh_loss(m, f_t, f_s);
        const double grown = lsh_loss(m, f_t, scale(f_s, s));
        CHECK(grown <= std::nextafter(base, std::numeric_limits<double>::infinity()));
    }
}

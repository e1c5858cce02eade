#include "doctest.h"

#include <cmath>
#include <numbers>

#include "featkd/grad_check.hpp"
#include "featkd/matrix.hpp"
#include "featkd/quadrature.hpp"
#include "featkd/rng.hpp"
#include "featkd/special.hpp"

using namespace featkd;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("rng: identical seeds give identical sequences") {
    RngStream a(42);
    RngStream b(42);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    for (int i = 0; i < 100; ++i) {
        CHECK(a.next_gaussian(0.0, 1.0) == b.next_gaussian(0.0, 1.0));
    }
}

TEST_CASE("rng: substreams are stable and independent of draw position") {
    RngStream a(7);
    RngStream sub_before = a.substream(3);
    a.next_u64();
    a.next_u64();
    RngStream sub_after = a.substream(3);
    CHECK(sub_before.next_u64() == sub_after.next_u64());
    CHECK(RngStream(7).substream(3).next_u64() != RngStream(7).substream(4).next_u64());
}

TEST_CASE("rng: next_below stays in range and covers small moduli") {
    RngStream rng(11);
    bool seen[5] = {false, false, false, false, false};
    for (int i = 0; i < 500; ++i) {
        const std::uint64_t v = rng.next_below(5);
        REQUIRE(v < 5);
        seen[v] = true;
    }
    for (bool s : seen) {
        CHECK(s);
    }
}

TEST_CASE("gaussian_matrix: zero std gives the mean everywhere") {
    RngStream rng(1);
    const Matrix m = gaussian_matrix(2, 2, 0.0, 0.0, rng);
    for (double v : m.data()) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("gaussian_matrix: sample moments near target for seed 7") {
    RngStream rng(7);
    const Matrix m = gaussian_matrix(1000, 1, 0.0, 1.0, rng);
    double mean = 0.0;
    for (double v : m.data()) {
        mean += v;
    }
    mean /= 1000.0;
    double var = 0.0;
    for (double v : m.data()) {
        var += (v - mean) * (v - mean);
    }
    var /= 1000.0;
    CHECK(std::fabs(mean) < 0.1);
    CHECK(std::fabs(std::sqrt(var) - 1.0) < 0.1);
}

TEST_CASE("gaussian_matrix: bitwise determinism and parameter validation") {
    RngStream a(7);
    RngStream b(7);
    CHECK(gaussian_matrix(8, 3, 0.5, 2.0, a) == gaussian_matrix(8, 3, 0.5, 2.0, b));
    RngStream c(7);
    CHECK_THROWS_AS(gaussian_matrix(2, 2, 0.0, -1.0, c), std::invalid_argument);
}

TEST_CASE("sigmoid: anchor values and symmetry") {
    CHECK(sigmoid(0.0) == doctest::Approx(0.5));
    CHECK(sigmoid(2.0) == doctest::Approx(0.8807970779778823).epsilon(1e-12));
    for (double x : {0.3, 1.7}) {
        CHECK(sigmoid(-x) == doctest::Approx(1.0 - sigmoid(x)).epsilon(1e-15));
    }
    CHECK(sigmoid(1000.0) == 1.0);  // saturates without overflow
    CHECK(sigmoid(-1000.0) == 0.0);
}

TEST_CASE("sign_step: strict threshold at zero") {
    CHECK(sign_step(0.5) == 1.0);
    CHECK(sign_step(0.0) == 0.0);
    CHECK(sign_step(-2.0) == 0.0);
}

TEST_CASE("angle_between: axis anchors") {
    const Vector e1{1.0, 0.0};
    const Vector e2{0.0, 1.0};
    CHECK(angle_between(e1, e1) == doctest::Approx(0.0));
    CHECK(angle_between(e1, e2) == doctest::Approx(kPi / 2));
    const Vector u{0.3, -1.2, 2.0};
    CHECK(angle_between(u, scale(u, -1.0)) == doctest::Approx(kPi));
    CHECK_THROWS_AS(angle_between(Vector{0.0, 0.0}, e1), std::domain_error);
}

TEST_CASE("angle_between: symmetric and scale invariant") {
    RngStream rng(3);
    for (int t = 0; t < 50; ++t) {
        const Vector u = gaussian_vector(5, 0.0, 1.0, rng);
        const Vector v = gaussian_vector(5, 0.0, 1.0, rng);
        const double s = 0.1 + 5.0 * rng.next_double();
        CHECK(angle_between(u, v) == doctest::Approx(angle_between(v, u)).epsilon(1e-12));
        CHECK(angle_between(scale(u, s), v) == doctest::Approx(angle_between(u, v)).epsilon(1e-9));
    }
}

TEST_CASE("surface_area: anchors and recurrence") {
    CHECK(surface_area(2) == doctest::Approx(2 * kPi).epsilon(1e-12));
    CHECK(surface_area(3) == doctest::Approx(4 * kPi).epsilon(1e-12));
    CHECK(surface_area(4) == doctest::Approx(2 * kPi * kPi).epsilon(1e-12));
    CHECK_THROWS_AS(surface_area(0), std::invalid_argument);
    // A_n = 2 pi A_{n-2} / (n - 1), stated in ambient dimension n + 1.
    for (std::size_t n = 3; n <= 64; ++n) {
        CHECK(surface_area(n + 1) ==
              doctest::Approx(2 * kPi * surface_area(n - 1) / static_cast<double>(n - 1))
                  .epsilon(1e-11));
    }
}

TEST_CASE("log_gamma: half-integer and integer anchors") {
    CHECK(log_gamma(1.0) == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(log_gamma(2.0) == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(log_gamma(0.5) == doctest::Approx(std::log(std::sqrt(kPi))).epsilon(1e-13));
    CHECK(log_gamma(5.0) == doctest::Approx(std::log(24.0)).epsilon(1e-13));
    CHECK(log_gamma(1024.0) == doctest::Approx(std::lgamma(1024.0)).epsilon(1e-12));
}

TEST_CASE("gamma_p / gamma_q: anchors and complement") {
    CHECK(gamma_p(1.0, 1.0) == doctest::Approx(0.6321205588285577).epsilon(1e-12));
    CHECK(gamma_p(0.5, 1.0) == doctest::Approx(std::erf(1.0)).epsilon(1e-12));
    for (double x : {0.2, 1.0, 5.0, 25.0}) {
        CHECK(gamma_p(3.0, x) + gamma_q(3.0, x) == doctest::Approx(1.0).epsilon(1e-12));
    }
    // Chi-square 1% critical value at 19 dof.
    CHECK(chi_square_sf(36.19086912927004, 19) == doctest::Approx(0.01).epsilon(1e-6));
}

TEST_CASE("integrate: anchor integrals") {
    CHECK(integrate([](double x) { return std::sin(x); }, 0.0, kPi, 1000) ==
          doctest::Approx(2.0).epsilon(1e-8));
    CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0, 1) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(integrate([](double) { return 1.0 / kPi; }, 0.0, kPi, 10) ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(integrate([](double) { return 1.0; }, 1.0, 0.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(integrate([](double x) { return 1.0 / x; }, 0.0, 1.0, 10),
                    std::runtime_error);
}

TEST_CASE("integrate: doubling panels tightens the error") {
    auto check_converges = [](auto f, double a, double b, double reference) {
        const double coarse = std::fabs(integrate(f, a, b, 4) - reference);
        const double fine = std::fabs(integrate(f, a, b, 8) - reference);
        CHECK(fine <= coarse);
    };
    check_converges([](double x) { return std::sin(x); }, 0.0, kPi, 2.0);
    check_converges([](double x) { return std::exp(x); }, 0.0, 1.0, std::numbers::e - 1.0);
    check_converges([](double x) { return 1.0 / (1.0 + x * x); }, 0.0, 1.0, kPi / 4.0);
}

TEST_CASE("integrate_log: matches linear-space quadrature") {
    const double direct = integrate([](double x) { return std::sin(x); }, 0.1, 3.0, 500);
    const double logged =
        std::exp(integrate_log([](double x) { return std::log(std::sin(x)); }, 0.1, 3.0, 500));
    CHECK(logged == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("integrate_log: survives extreme underflow") {
    // Integrand exp(-2000 + log sin x): peak value exp(-2000) underflows
    // linear doubles, but the log-space integral is just shifted.
    const double logged = integrate_log(
        [](double x) { return -2000.0 + std::log(std::sin(x)); }, 1e-9, kPi - 1e-9, 2000);
    CHECK(logged == doctest::Approx(-2000.0 + std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("finite_diff_grad: quadratic, constant, sigmoid anchors") {
    const Vector x{1.0, 2.0};
    const Vector g = finite_diff_grad([](const Vector& v) { return dot(v, v); }, x, 1e-5);
    CHECK(g[0] == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(g[1] == doctest::Approx(4.0).epsilon(1e-6));

    const Vector gc = finite_diff_grad([](const Vector&) { return 3.5; }, x, 1e-5);
    CHECK(gc[0] == 0.0);
    CHECK(gc[1] == 0.0);

    const Vector x0{0.0};
    const Vector gs = finite_diff_grad([](const Vector& v) { return sigmoid(v[0]); }, x0, 1e-5);
    CHECK(gs[0] == doctest::Approx(0.25).epsilon(1e-8));

    CHECK_THROWS_AS(finite_diff_grad([](const Vector&) { return 0.0; }, x, 0.0),
                    std::invalid_argument);
}

TEST_CASE("matrix: matvec / tmatvec / matmul agree with transpose") {
    RngStream rng(9);
    const Matrix a = gaussian_matrix(4, 6, 0.0, 1.0, rng);
    const Vector x = gaussian_vector(6, 0.0, 1.0, rng);
    const Vector y = gaussian_vector(4, 0.0, 1.0, rng);
    const Vector ax = matvec(a, x);
    const Vector aty = tmatvec(a, y);
    // <A x, y> == <x, A^T y>
    CHECK(dot(ax, y) == doctest::Approx(dot(x, aty)).epsilon(1e-12));
    const Matrix at = transpose(a);
    const Vector via_t = matvec(at, y);
    for (std::size_t j = 0; j < 6; ++j) {
        CHECK(via_t[j] == doctest::Approx(aty[j]).epsilon(1e-15));
    }
    const Matrix b = gaussian_matrix(6, 3, 0.0, 1.0, rng);
    const Matrix ab = matmul(a, b);
    const Vector z = gaussian_vector(3, 0.0, 1.0, rng);
    const Vector lhs = matvec(ab, z);
    const Vector rhs = matvec(a, matvec(b, z));
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(lhs[i] == doctest::Approx(rhs[i]).epsilon(1e-12));
    }
    CHECK_THROWS_AS(matvec(a, y), std::invalid_argument);
}

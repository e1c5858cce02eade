#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>
#include <vector>

#include "featkd/lsh.hpp"
#include "featkd/matrix.hpp"
#include "featkd/quadrature.hpp"
#include "featkd/rng.hpp"
#include "featkd/special.hpp"

namespace featkd {

/// One point of a cumulative angle curve.
struct CurvePoint {
    double epsilon = 0.0;      // radians
    double probability = 0.0;  // in [0, 1]
};

/// Monte Carlo estimate with binomial bookkeeping.
struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
    std::size_t accepted = 0;
};

struct InsufficientSamplesError : std::runtime_error {
    explicit InsufficientSamplesError(McEstimate acc)
        : std::runtime_error("rejection sampling accepted zero proposals"), acceptance(acc) {}
    McEstimate acceptance;
};

/// Randomized check result for the scale-invariance claims.
struct ClaimReport {
    int claim = 0;
    bool pass = false;
    std::size_t trials = 0;
    std::size_t violations = 0;
    double worst_deviation = 0.0;
};

/// Probability that a single hash term's loss is below log 2 given the angle
/// between the two features: 1 - theta / pi.
inline double prob_loss_small_given_angle(double theta) {
    if (!(theta >= 0.0 && theta <= std::numbers::pi)) {
        throw std::invalid_argument("prob_loss_small_given_angle: theta must be in [0, pi]");
    }
    return 1.0 - theta / std::numbers::pi;
}

namespace detail {

// A hash term's loss is below log 2 exactly when the projection signs agree
// in the sense of the step convention: strictly positive pairs with h = 1,
// strictly negative student projections with h = 0.
inline bool loss_small_event(double proj_t, double proj_s) {
    return (proj_t > 0.0 && proj_s > 0.0) || (proj_t <= 0.0 && proj_s < 0.0);
}

// Orthonormal pair spanning a random 2-plane.
inline std::pair<Vector, Vector> random_frame2(std::size_t dim, RngStream& rng) {
    Vector u = gaussian_vector(dim, 0.0, 1.0, rng);
    const double nu = norm2(u);
    for (double& x : u) {
        x /= nu;
    }
    Vector v = gaussian_vector(dim, 0.0, 1.0, rng);
    const double uv = dot(u, v);
    for (std::size_t i = 0; i < dim; ++i) {
        v[i] -= uv * u[i];
    }
    const double nv = norm2(v);
    for (double& x : v) {
        x /= nv;
    }
    return {std::move(u), std::move(v)};
}

template <class ChunkFn>
void run_chunks(std::size_t chunks, ChunkFn&& fn) {
    if (chunks <= 1) {
        fn(0);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) {
        workers.emplace_back(fn, c);
    }
    for (std::thread& t : workers) {
        t.join();
    }
}

}  // namespace detail

/// Monte Carlo for the single-term loss probability: fixes a feature pair at
/// the exact angle theta inside a random 2-plane, samples standard Gaussian
/// hash directions, and counts the loss-below-log-2 event. Chunks run on
/// derived substreams and merge in index order, so the result depends only on
/// (stream state, samples, chunks).
inline McEstimate mc_prob_loss_small(std::size_t dim, double theta, std::size_t samples,
                                     RngStream& rng, std::size_t chunks = 1) {
    if (dim < 2) {
        throw std::invalid_argument("mc_prob_loss_small: requires dim >= 2");
    }
    if (!(theta > 0.0 && theta < std::numbers::pi)) {
        throw std::invalid_argument("mc_prob_loss_small: theta must be in (0, pi)");
    }
    if (samples < 1 || chunks < 1) {
        throw std::invalid_argument("mc_prob_loss_small: samples and chunks must be >= 1");
    }
    RngStream base(rng.next_u64());
    auto [u, v] = detail::random_frame2(dim, base);
    Vector f_t = u;
    Vector f_s(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        f_s[i] = std::cos(theta) * u[i] + std::sin(theta) * v[i];
    }

    std::vector<std::size_t> hits(chunks, 0);
    std::vector<std::size_t> counts(chunks, 0);
    detail::run_chunks(chunks, [&](std::size_t c) {
        RngStream chunk_rng = base.substream(c + 1);
        const std::size_t n = samples / chunks + (c < samples % chunks ? 1 : 0);
        std::size_t local_hits = 0;
        Vector w(dim);
        for (std::size_t s = 0; s < n; ++s) {
            for (double& x : w) {
                x = chunk_rng.next_gaussian(0.0, 1.0);
            }
            if (detail::loss_small_event(dot(w, f_t), dot(w, f_s))) {
                ++local_hits;
            }
        }
        hits[c] = local_hits;
        counts[c] = n;
    });

    std::size_t total_hits = 0;
    std::size_t total = 0;
    for (std::size_t c = 0; c < chunks; ++c) {
        total_hits += hits[c];
        total += counts[c];
    }
    McEstimate est;
    est.samples = total;
    est.accepted = total_hits;
    est.value = static_cast<double>(total_hits) / static_cast<double>(total);
    est.std_error = std::sqrt(est.value * (1.0 - est.value) / static_cast<double>(total));
    return est;
}

/// Log density of the angle between two independent isotropic Gaussian
/// vectors in R^D: log[(A_{D-2} / A_{D-1}) sin^{D-2}(theta)], evaluated via
/// log-gamma so it stays finite up to D in the thousands.
inline double angle_log_pdf(std::size_t dim, double theta) {
    if (dim < 2) {
        throw std::invalid_argument("angle_log_pdf: requires dim >= 2");
    }
    if (!(theta > 0.0 && theta < std::numbers::pi)) {
        throw std::invalid_argument("angle_log_pdf: theta must be in (0, pi)");
    }
    const double d = static_cast<double>(dim);
    const double log_ratio =
        log_gamma(0.5 * d) - log_gamma(0.5 * (d - 1.0)) - 0.5 * std::log(std::numbers::pi);
    const double sin_term =
        dim == 2 ? 0.0 : (d - 2.0) * std::log(std::sin(theta));
    return log_ratio + sin_term;
}

inline double angle_pdf(std::size_t dim, double theta) {
    return std::exp(angle_log_pdf(dim, theta));
}

namespace detail {

inline constexpr double kEndpointGuard = 1e-9;
inline constexpr std::size_t kDefaultPanels = 20000;

// log of (1 - theta/pi)^N * sin^{D-2}(theta); the zero-exponent factors are
// dropped so N = 0 and D = 2 behave as constants.
inline double claim4_log_integrand(std::size_t dim, std::size_t n_hash, double theta) {
    double acc = 0.0;
    if (n_hash > 0) {
        acc += static_cast<double>(n_hash) * std::log1p(-theta / std::numbers::pi);
    }
    if (dim > 2) {
        acc += static_cast<double>(dim - 2) * std::log(std::sin(theta));
    }
    return acc;
}

inline double log_add_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
}

}  // namespace detail

/// CDF of the angle density: P(angle <= theta) by log-space Simpson.
inline double angle_cdf(std::size_t dim, double theta, std::size_t panels = detail::kDefaultPanels) {
    if (dim < 2) {
        throw std::invalid_argument("angle_cdf: requires dim >= 2");
    }
    if (!(theta > 0.0 && theta <= std::numbers::pi)) {
        throw std::invalid_argument("angle_cdf: theta must be in (0, pi]");
    }
    const double a = detail::kEndpointGuard;
    const double b = std::min(theta, std::numbers::pi - detail::kEndpointGuard);
    if (b <= a) {
        return 0.0;
    }
    const double log_integral =
        integrate_log([dim](double t) { return angle_log_pdf(dim, t); }, a, b, panels);
    return std::min(1.0, std::exp(log_integral));
}

/// Conditional cumulative angle probability given that all N hash-term
/// losses stay below log 2: the ratio of the two truncated-sine integrals,
/// evaluated in log space. N = 0 reduces to the unconditional angle CDF.
inline double conditional_angle_cdf(std::size_t dim, std::size_t n_hash, double epsilon,
                                    std::size_t panels = detail::kDefaultPanels) {
    if (dim < 2) {
        throw std::invalid_argument("conditional_angle_cdf: requires dim >= 2");
    }
    if (!(epsilon > 0.0 && epsilon <= std::numbers::pi)) {
        throw std::invalid_argument("conditional_angle_cdf: epsilon must be in (0, pi]");
    }
    const double a = detail::kEndpointGuard;
    const double b_full = std::numbers::pi - detail::kEndpointGuard;
    const double b_num = std::min(epsilon, b_full);
    if (b_num <= a) {
        return 0.0;
    }
    auto log_f = [dim, n_hash](double t) { return detail::claim4_log_integrand(dim, n_hash, t); };
    const double log_num = integrate_log(log_f, a, b_num, panels);
    const double log_den = integrate_log(log_f, a, b_full, panels);
    return std::min(1.0, std::exp(log_num - log_den));
}

/// Whole conditional-angle curve on a uniform epsilon grid (k * pi / points).
/// One cumulative log-space pass, so large point counts stay cheap.
inline std::vector<CurvePoint> conditional_angle_curve(std::size_t dim, std::size_t n_hash,
                                                       std::size_t points,
                                                       std::size_t panels = detail::kDefaultPanels) {
    if (points < 2) {
        throw std::invalid_argument("conditional_angle_curve: requires points >= 2");
    }
    auto log_f = [dim, n_hash](double t) { return detail::claim4_log_integrand(dim, n_hash, t); };
    const double a = detail::kEndpointGuard;
    const double b_full = std::numbers::pi - detail::kEndpointGuard;
    const std::size_t seg_panels = std::max<std::size_t>(4, panels / points);
    std::vector<double> log_cum(points);
    double running = -std::numeric_limits<double>::infinity();
    double left = a;
    for (std::size_t k = 0; k < points; ++k) {
        const double eps = std::numbers::pi * static_cast<double>(k + 1) / static_cast<double>(points);
        const double right = std::min(eps, b_full);
        if (right > left) {
            running = detail::log_add_exp(running, integrate_log(log_f, left, right, seg_panels));
            left = right;
        }
        log_cum[k] = running;
    }
    std::vector<CurvePoint> curve(points);
    const double log_total = log_cum.back();
    for (std::size_t k = 0; k < points; ++k) {
        curve[k].epsilon = std::numbers::pi * static_cast<double>(k + 1) / static_cast<double>(points);
        curve[k].probability = std::min(1.0, std::exp(log_cum[k] - log_total));
    }
    return curve;
}

/// Epsilon at which a monotone curve crosses the given probability level,
/// linearly interpolated between grid points.
inline double curve_crossing(const std::vector<CurvePoint>& curve, double level) {
    if (curve.empty()) {
        throw std::invalid_argument("curve_crossing: empty curve");
    }
    double prev_eps = 0.0;
    double prev_p = 0.0;
    for (const CurvePoint& pt : curve) {
        if (pt.probability >= level) {
            const double span = pt.probability - prev_p;
            if (span <= 0.0) {
                return pt.epsilon;
            }
            return prev_eps + (pt.epsilon - prev_eps) * (level - prev_p) / span;
        }
        prev_eps = pt.epsilon;
        prev_p = pt.probability;
    }
    return curve.back().epsilon;
}

struct ConditionalAngleMc {
    std::vector<CurvePoint> cdf;
    McEstimate acceptance;
    std::vector<double> angles;  // accepted angles, chunk order
};

/// Rejection sampling for the conditional angle distribution: propose
/// independent Gaussian feature pairs and a fresh zero-bias hash module per
/// proposal, accept when every hash term's loss is below log 2, and report
/// the empirical CDF of accepted angles on a uniform epsilon grid.
inline ConditionalAngleMc mc_conditional_angle(std::size_t dim, std::size_t n_hash,
                                               std::size_t samples, RngStream& rng,
                                               std::size_t grid_points = 64,
                                               std::size_t chunks = 1) {
    if (dim < 2) {
        throw std::invalid_argument("mc_conditional_angle: requires dim >= 2");
    }
    if (samples < 1 || chunks < 1 || grid_points < 2) {
        throw std::invalid_argument("mc_conditional_angle: invalid sampling parameters");
    }
    RngStream base(rng.next_u64());
    std::vector<std::vector<double>> chunk_angles(chunks);
    std::vector<std::size_t> counts(chunks, 0);
    detail::run_chunks(chunks, [&](std::size_t c) {
        RngStream chunk_rng = base.substream(c + 1);
        const std::size_t n = samples / chunks + (c < samples % chunks ? 1 : 0);
        counts[c] = n;
        Vector f_t(dim);
        Vector f_s(dim);
        Vector w(dim);
        for (std::size_t s = 0; s < n; ++s) {
            for (double& x : f_t) {
                x = chunk_rng.next_gaussian(0.0, 1.0);
            }
            for (double& x : f_s) {
                x = chunk_rng.next_gaussian(0.0, 1.0);
            }
            bool all_small = true;
            for (std::size_t j = 0; j < n_hash; ++j) {
                for (double& x : w) {
                    x = chunk_rng.next_gaussian(0.0, 1.0);
                }
                if (!detail::loss_small_event(dot(w, f_t), dot(w, f_s))) {
                    all_small = false;
                    break;
                }
            }
            if (all_small) {
                chunk_angles[c].push_back(angle_between(f_t, f_s));
            }
        }
    });

    ConditionalAngleMc out;
    std::size_t total = 0;
    for (std::size_t c = 0; c < chunks; ++c) {
        total += counts[c];
        out.angles.insert(out.angles.end(), chunk_angles[c].begin(), chunk_angles[c].end());
    }
    out.acceptance.samples = total;
    out.acceptance.accepted = out.angles.size();
    out.acceptance.value = static_cast<double>(out.angles.size()) / static_cast<double>(total);
    out.acceptance.std_error =
        std::sqrt(out.acceptance.value * (1.0 - out.acceptance.value) / static_cast<double>(total));
    if (out.angles.empty()) {
        throw InsufficientSamplesError(out.acceptance);
    }

    std::vector<double> sorted = out.angles;
    std::sort(sorted.begin(), sorted.end());
    out.cdf.resize(grid_points);
    for (std::size_t k = 0; k < grid_points; ++k) {
        const double eps =
            std::numbers::pi * static_cast<double>(k + 1) / static_cast<double>(grid_points);
        const auto below = std::lower_bound(sorted.begin(), sorted.end(), eps);
        out.cdf[k].epsilon = eps;
        out.cdf[k].probability = static_cast<double>(below - sorted.begin()) /
                                 static_cast<double>(sorted.size());
    }
    return out;
}

/// Claim 1 verifier. Part one: with zero bias, the loss is exactly invariant
/// to positive scaling of the teacher feature. Part two: when the median bias
/// is recomputed on a scaled teacher set, every teacher hash code is
/// unchanged, hence the loss seen by any student feature is unchanged; both
/// are checked exactly.
inline ClaimReport verify_claim1(std::size_t dim, std::size_t n_hash, std::size_t trials,
                                 RngStream& rng, std::size_t teacher_set_size = 101) {
    if (trials < 1) {
        throw std::invalid_argument("verify_claim1: trials must be >= 1");
    }
    ClaimReport report;
    report.claim = 1;
    report.trials = trials;
    for (std::size_t t = 0; t < trials; ++t) {
        HashModule module = init_hash_module(dim, n_hash, 1.0, rng);
        const Vector f_t = gaussian_vector(dim, 0.0, 1.0, rng);
        const Vector f_s = gaussian_vector(dim, 0.0, 1.0, rng);
        const double s = std::pow(10.0, 2.0 * rng.next_double() - 1.0);

        const double base = lsh_loss(module, f_t, f_s);
        const double scaled = lsh_loss(module, scale(f_t, s), f_s);
        if (scaled != base) {
            ++report.violations;
            report.worst_deviation = std::max(report.worst_deviation, std::fabs(scaled - base));
        }

        std::vector<Vector> teacher_set(teacher_set_size);
        for (Vector& f : teacher_set) {
            f = gaussian_vector(dim, 0.0, 1.0, rng);
        }
        std::vector<Vector> scaled_set(teacher_set_size);
        for (std::size_t i = 0; i < teacher_set_size; ++i) {
            scaled_set[i] = scale(teacher_set[i], s);
        }
        const HashModule biased = init_bias(module, teacher_set, BiasInit::Median);
        const HashModule biased_scaled = init_bias(module, scaled_set, BiasInit::Median);
        const Vector codes = hash_codes(biased, f_t);
        const Vector codes_scaled = hash_codes(biased_scaled, scale(f_t, s));
        if (codes != codes_scaled) {
            ++report.violations;
        }
        const double loss_base = lsh_loss_given_codes(biased, codes, f_s);
        const double loss_scaled = lsh_loss_given_codes(biased, codes_scaled, f_s);
        if (loss_scaled != loss_base) {
            ++report.violations;
            report.worst_deviation =
                std::max(report.worst_deviation, std::fabs(loss_scaled - loss_base));
        }
    }
    report.pass = report.violations == 0;
    return report;
}

/// Claim 2 verifier: with zero bias and the student collinear with the
/// teacher, growing the student magnitude never increases the loss. Checked
/// with one ulp of slack on each trial.
inline ClaimReport verify_claim2(std::size_t dim, std::size_t n_hash, std::size_t trials,
                                 RngStream& rng) {
    if (trials < 1) {
        throw std::invalid_argument("verify_claim2: trials must be >= 1");
    }
    ClaimReport report;
    report.claim = 2;
    report.trials = trials;
    for (std::size_t t = 0; t < trials; ++t) {
        HashModule module = init_hash_module(dim, n_hash, 1.0, rng);
        const Vector f_t = gaussian_vector(dim, 0.0, 1.0, rng);
        const double c = std::pow(10.0, 2.0 * rng.next_double() - 1.0);
        const Vector f_s = scale(f_t, c);
        const double s = 1.0 + 9.0 * (1.0 - rng.next_double());  // in (1, 10]
        const double base = lsh_loss(module, f_t, f_s);
        const double grown = lsh_loss(module, f_t, scale(f_s, s));
        if (grown > std::nextafter(base, std::numeric_limits<double>::infinity())) {
            ++report.violations;
            report.worst_deviation = std::max(report.worst_deviation, grown - base);
        }
    }
    report.pass = report.violations == 0;
    return report;
}

/// Expected L2 norm of a Gaussian vector with the given entry std:
/// std * sqrt(D). Exact up to the chi-distribution correction, which is
/// below 0.1% already at D = 256.
inline double expected_weight_norm(double std, std::size_t dim) {
    if (std < 0.0 || dim < 1) {
        throw std::invalid_argument("expected_weight_norm: requires std >= 0 and dim >= 1");
    }
    return std * std::sqrt(static_cast<double>(dim));
}

/// Mean and standard deviation of the angle density, by quadrature. Test
/// oracle for feature statistics of independent random models.
struct AngleMoments {
    double mean = 0.0;
    double stddev = 0.0;
};

inline AngleMoments angle_moments(std::size_t dim, std::size_t panels = detail::kDefaultPanels) {
    const double a = detail::kEndpointGuard;
    const double b = std::numbers::pi - detail::kEndpointGuard;
    const double mean =
        integrate([dim](double t) { return t * angle_pdf(dim, t); }, a, b, panels);
    const double second =
        integrate([dim](double t) { return t * t * angle_pdf(dim, t); }, a, b, panels);
    AngleMoments m;
    m.mean = mean;
    m.stddev = std::sqrt(std::max(0.0, second - mean * mean));
    return m;
}

}  // namespace featkd

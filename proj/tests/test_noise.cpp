#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "csl/errors.hpp"
#include "csl/kernel_field.hpp"
#include "csl/noise.hpp"
#include "csl/rng.hpp"
#include "test_support.hpp"

using namespace csl;
using namespace csl_test;

TEST_CASE("philox4x32-10 known-answer vectors") {
    // Reference vectors of the Random123 distribution.
    {
        Philox4x32 eng(0);
        const auto o = eng({0, 0, 0, 0});
        CHECK(o == Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu,
                                       0x9b00dbd8u});
    }
    {
        Philox4x32 eng(0xffffffffffffffffull);
        const auto o = eng(
            {0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu});
        CHECK(o == Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u,
                                       0x6d5451fdu});
    }
    {
        Philox4x32 eng((0x299f31d0ull << 32) | 0xa4093822ull);
        const auto o = eng(
            {0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u});
        CHECK(o == Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u,
                                       0x24126ea1u});
    }
}

TEST_CASE("white increments: moments and reproducibility") {
    const std::size_t n = 1000000;
    const double dt = 0.01;
    const SeedPolicy seed{42, 7};
    const auto inc = white_increments(n, dt, seed);

    // 4 sigma bound on the sample mean, law of large numbers.
    const double se_mean = std::sqrt(dt / static_cast<double>(n));
    CHECK(std::abs(mean(inc)) < 4.0 * se_mean);
    CHECK(variance(inc) == doctest::Approx(dt).epsilon(0.01));

    const auto again = white_increments(n, dt, seed);
    CHECK(inc == again);

    // Distinct streams differ and are uncorrelated.
    const auto other = white_increments(n, dt, SeedPolicy{42, 8});
    CHECK(inc != other);
    const double c = covariance(inc, other);
    CHECK(std::abs(c) < 4.0 * dt / std::sqrt(static_cast<double>(n)));

    CHECK_THROWS_AS(white_increments(n, 0.0, seed), InvalidParameterError);
    CHECK_THROWS_AS(white_increments(n, -1.0, seed), InvalidParameterError);
    CHECK_THROWS_AS(white_increments(0, dt, seed), InvalidParameterError);
}

TEST_CASE("white increments pass a KS test against the exact law") {
    const double dt = 0.25;
    const auto inc = white_increments(100000, dt, SeedPolicy{11, 0});
    const double d = ks_vs_normal(inc, 0.0, std::sqrt(dt));
    // One-sample critical value at the 1e-3 level.
    const double crit = 1.95 / std::sqrt(100000.0);
    CHECK(d < crit);
}

TEST_CASE("affine noise: A = 1 reproduces white statistics") {
    const std::size_t n = 100000;
    const double dt = 0.01;
    const auto aff = affine_increments(1.0, TimeGrid{n, dt}, SeedPolicy{5, 0});
    const auto wht = white_increments(n, dt, SeedPolicy{6, 0});

    // Two-sided two-sample KS at the 1e-3 level.
    const double d = ks_two_sample(aff, wht);
    CHECK(d < ks_two_sample_critical(1e-3, n, n));

    // Lag-1 sample autocorrelation within 4 sigma of zero.
    std::vector<double> a(aff.begin(), aff.end() - 1);
    std::vector<double> b(aff.begin() + 1, aff.end());
    const double rho = covariance(a, b) / variance(aff);
    CHECK(std::abs(rho) < 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("affine noise: A = 2 is ballistic") {
    const std::size_t n = 64;
    const double dt = 0.125;
    const double t_n = static_cast<double>(n) * dt;
    const std::size_t reps = 20000;
    std::vector<double> b_final(reps);
    FgnSynthesizer synth(2.0, n, dt);
    for (std::size_t r = 0; r < reps; ++r) {
        const auto inc = synth.sample(SeedPolicy{77, r});
        double b = 0.0;
        for (double v : inc) b += v;
        b_final[r] = b;
    }
    CHECK(variance(b_final) / (t_n * t_n) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("affine noise: sampled covariance matches the fBm law") {
    // Brute-force ensemble average against (t_i^A + t_j^A - |ti-tj|^A)/2.
    const double A = 1.5;
    const std::size_t n = 256;
    const double dt = 1.0 / 64.0;
    const std::size_t reps = 4000;
    const std::vector<std::size_t> picks = {3, 15, 63, 127, 191, 255};

    FgnSynthesizer synth(A, n, dt);
    std::vector<std::vector<double>> b_at(picks.size(),
                                          std::vector<double>(reps));
    for (std::size_t r = 0; r < reps; ++r) {
        const auto inc = synth.sample(SeedPolicy{99, r});
        double acc = 0.0;
        std::size_t pi = 0;
        for (std::size_t k = 0; k < n; ++k) {
            acc += inc[k];
            if (pi < picks.size() && picks[pi] == k) b_at[pi++][r] = acc;
        }
    }
    for (std::size_t i = 0; i < picks.size(); ++i) {
        for (std::size_t j = i; j < picks.size(); ++j) {
            const double ti = static_cast<double>(picks[i] + 1) * dt;
            const double tj = static_cast<double>(picks[j] + 1) * dt;
            const double target = fbm_covariance(A, ti, tj);
            const double est = i == j ? variance(b_at[i])
                                      : covariance(b_at[i], b_at[j]);
            // se of a covariance estimate between jointly Gaussian values.
            const double cii = fbm_covariance(A, ti, ti);
            const double cjj = fbm_covariance(A, tj, tj);
            const double se = std::sqrt(
                (cii * cjj + target * target) / static_cast<double>(reps));
            CHECK(std::abs(est - target) < 5.0 * se);
        }
    }
}

TEST_CASE("affine noise: Cholesky and Hosking agree") {
    const double A = 1.5;
    const std::size_t n = 512;
    const double dt = 0.01;
    const double t_n = static_cast<double>(n) * dt;
    const double target = std::pow(t_n, A);
    const std::size_t reps = 3000;

    FgnSynthesizer chol(A, n, dt, FgnSynthesizer::Method::Cholesky);
    FgnSynthesizer hosk(A, n, dt, FgnSynthesizer::Method::Hosking);
    CHECK(chol.method() == FgnSynthesizer::Method::Cholesky);
    CHECK(hosk.method() == FgnSynthesizer::Method::Hosking);

    auto final_vars = [&](const FgnSynthesizer& s, std::uint64_t seed0) {
        std::vector<double> out(reps);
        for (std::size_t r = 0; r < reps; ++r) {
            const auto inc = s.sample(SeedPolicy{seed0, r});
            double b = 0.0;
            for (double v : inc) b += v;
            out[r] = b;
        }
        return out;
    };
    const auto vc = final_vars(chol, 1001);
    const auto vh = final_vars(hosk, 2002);
    const double rel_se = std::sqrt(2.0 / static_cast<double>(reps));
    CHECK(variance(vc) == doctest::Approx(target).epsilon(4.0 * rel_se));
    CHECK(variance(vh) == doctest::Approx(target).epsilon(4.0 * rel_se));

    // Same seed, same method -> bit identical.
    CHECK(chol.sample(SeedPolicy{3, 3}) == chol.sample(SeedPolicy{3, 3}));
    CHECK(hosk.sample(SeedPolicy{3, 3}) == hosk.sample(SeedPolicy{3, 3}));
}

TEST_CASE("affine noise parameter validation") {
    CHECK_THROWS_AS(affine_increments(0.0, TimeGrid{16, 0.1}, SeedPolicy{}),
                    InvalidParameterError);
    CHECK_THROWS_AS(affine_increments(-0.5, TimeGrid{16, 0.1}, SeedPolicy{}),
                    InvalidParameterError);
    CHECK_THROWS_AS(affine_increments(2.5, TimeGrid{16, 0.1}, SeedPolicy{}),
                    InvalidParameterError);
    CHECK_NOTHROW(affine_increments(2.0, TimeGrid{16, 0.1}, SeedPolicy{}));
    CHECK_THROWS_AS(FgnSynthesizer(1.5, 8192, 0.1,
                                   FgnSynthesizer::Method::Cholesky),
                    InvalidParameterError);
}

TEST_CASE("field increments: variance additivity") {
    SpatialGrid grid{-2.0, 2.0, 64};
    const double dt = 0.05;
    const double total_len = grid.q_max - grid.q_min;
    const std::size_t reps = 100000;

    std::vector<double> sums(reps);
    FieldSampler sampler(SeedPolicy{123, 0});
    std::vector<double> cells(grid.n_cells);
    for (std::size_t r = 0; r < reps; ++r) {
        sampler.fill_cells(r, 0, cells, dt, grid.dq());
        double s = 0.0;
        for (double v : cells) s += v;
        sums[r] = s;
    }
    // Var(sum dB_i) = dt * L for the unit weight function.
    CHECK(variance(sums) == doctest::Approx(dt * total_len).epsilon(0.02));
}

TEST_CASE("field increments: disjoint subsets are independent") {
    SpatialGrid grid{-2.0, 2.0, 64};
    const double dt = 0.05;
    const std::size_t reps = 20000;
    std::vector<double> left(reps), right(reps);
    FieldSampler sampler(SeedPolicy{124, 0});
    std::vector<double> cells(grid.n_cells);
    for (std::size_t r = 0; r < reps; ++r) {
        sampler.fill_cells(r, 0, cells, dt, grid.dq());
        double l = 0.0, rr = 0.0;
        for (std::size_t i = 0; i < 32; ++i) l += cells[i];
        for (std::size_t i = 32; i < 64; ++i) rr += cells[i];
        left[r] = l;
        right[r] = rr;
    }
    const double var_half = dt * 2.0; // dt * (L/2)
    const double se = var_half / std::sqrt(static_cast<double>(reps));
    CHECK(std::abs(covariance(left, right)) < 4.0 * se);
}

TEST_CASE("field increments: Riemann refinement keeps weighted variance") {
    // Var(sum f(q_i) dB_i) = dt * sum f^2 dq converges as dq -> 0; compare
    // two resolutions by brute force.
    const double dt = 0.1;
    const std::size_t reps = 40000;
    auto weighted_var = [&](std::size_t n_cells, std::uint64_t seed0) {
        SpatialGrid grid{-3.0, 3.0, n_cells};
        FieldSampler sampler(SeedPolicy{seed0, 0});
        std::vector<double> cells(grid.n_cells);
        std::vector<double> sums(reps);
        for (std::size_t r = 0; r < reps; ++r) {
            sampler.fill_cells(r, 0, cells, dt, grid.dq());
            double s = 0.0;
            for (std::size_t i = 0; i < n_cells; ++i)
                s += std::cos(grid.center(i)) * cells[i];
            sums[r] = s;
        }
        return variance(sums);
    };
    const double v_coarse = weighted_var(96, 55);
    const double v_fine = weighted_var(192, 56);
    const double rel_se = std::sqrt(2.0 / static_cast<double>(reps));
    CHECK(std::abs(v_fine - v_coarse) < 4.0 * rel_se * v_coarse);
}

TEST_CASE("field increments address cells by counter") {
    // A sub-range materializes exactly the same values as the full grid.
    SpatialGrid grid{-1.0, 1.0, 50};
    const SeedPolicy seed{321, 9};
    const auto full = field_increments(grid, 0.02, seed, 17);
    FieldSampler sampler(seed);
    std::vector<double> window(13);
    sampler.fill_cells(17, 21, window, 0.02, grid.dq());
    for (std::size_t k = 0; k < window.size(); ++k)
        CHECK(window[k] == full[21 + k]);

    CHECK_THROWS_AS(field_increments(grid, 0.0, seed),
                    InvalidParameterError);
}

TEST_CASE("integrated affine variance follows the power law (quick)") {
    // Slope recovery over one decade; the full A sweep at 1e4 realizations
    // runs in the acceptance suite.
    const double A = 1.5;
    const std::size_t n = 128;
    const double dt = 0.05;
    const std::size_t reps = 4000;
    FgnSynthesizer synth(A, n, dt);
    std::vector<double> sum_b2(n, 0.0);
    for (std::size_t r = 0; r < reps; ++r) {
        const auto inc = synth.sample(SeedPolicy{2024, r});
        double b = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            b += inc[k];
            sum_b2[k] += b * b;
        }
    }
    // Weighted log-log slope over the last decade.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t cnt = 0;
    for (std::size_t k = n / 10; k < n; ++k) {
        const double t = static_cast<double>(k + 1) * dt;
        const double v = sum_b2[k] / static_cast<double>(reps);
        const double lx = std::log(t), ly = std::log(v);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++cnt;
    }
    const double nn = static_cast<double>(cnt);
    const double slope = (sxy - sx * sy / nn) / (sxx - sx * sx / nn);
    CHECK(slope == doctest::Approx(A).epsilon(0.05));
}

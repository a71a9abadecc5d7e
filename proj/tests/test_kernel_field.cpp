#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "csl/errors.hpp"
#include "csl/kernel_field.hpp"
#include "csl/noise.hpp"
#include "csl/params.hpp"
#include "test_support.hpp"

using namespace csl;
using namespace csl_test;

namespace {

// Trapezoid quadrature of f over [a, b].
template <typename F>
double trapezoid(F&& f, double a, double b, std::size_t n) {
    const double h = (b - a) / static_cast<double>(n);
    double acc = 0.5 * (f(a) + f(b));
    for (std::size_t i = 1; i < n; ++i)
        acc += f(a + static_cast<double>(i) * h);
    return acc * h;
}

} // namespace

TEST_CASE("kernel normalization and symmetry") {
    CHECK(gaussian_kernel(2.0 * std::numbers::pi, 0.0) ==
          doctest::Approx(1.0).epsilon(1e-15));

    for (double alpha : {0.5, 1.0, 4.0}) {
        for (double x : {0.1, 0.7, 2.5})
            CHECK(gaussian_kernel(alpha, x) == gaussian_kernel(alpha, -x));

        // Quadrature oracle: unit mass over +-10 kernel widths.
        const double w = 10.0 / std::sqrt(alpha);
        const double q = trapezoid(
            [&](double u) { return gaussian_kernel(alpha, u); }, -w, w,
            20000);
        CHECK(q == doctest::Approx(1.0).epsilon(1e-6));
    }
    CHECK_THROWS_AS(gaussian_kernel(0.0, 1.0), InvalidParameterError);
}

TEST_CASE("kernel gradient against finite differences") {
    CHECK(kernel_gradient(3.0, 0.0) == 0.0);
    CHECK(kernel_gradient(4.0, 0.8) == -kernel_gradient(4.0, -0.8));

    const double alpha = 4.0;
    const double x = 0.3;
    const double h = 1e-6;
    const double fd =
        (gaussian_kernel(alpha, x + h) - gaussian_kernel(alpha, x - h)) /
        (2.0 * h);
    CHECK(kernel_gradient(alpha, x) == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("squared-gradient integral closed form") {
    for (double alpha : {0.5, 1.0, 4.0}) {
        const double w = 10.0 / std::sqrt(alpha);
        const double q = trapezoid(
            [&](double u) {
                const double g = kernel_gradient(alpha, u);
                return g * g;
            },
            -w, w, 20000);
        CHECK(kernel_gradient_sq_integral(alpha) ==
              doctest::Approx(q).epsilon(1e-8));
    }
    CHECK(kernel_gradient_sq_integral(1.0) ==
          doctest::Approx(1.0 / (4.0 * std::sqrt(std::numbers::pi)))
              .epsilon(1e-15));
}

TEST_CASE("grid validation for kernel use") {
    CHECK_NOTHROW(validate_grid_for_kernel(SpatialGrid{-8, 8, 800}, 1.0));
    // Too narrow: fewer than 8 kernel widths.
    CHECK_THROWS_AS(validate_grid_for_kernel(SpatialGrid{-3, 3, 600}, 1.0),
                    InvalidParameterError);
    // Too coarse: dq above 0.2 kernel widths.
    CHECK_THROWS_AS(validate_grid_for_kernel(SpatialGrid{-8, 8, 50}, 1.0),
                    InvalidParameterError);
    CHECK_THROWS_AS(validate(SpatialGrid{1.0, -1.0, 10}),
                    InvalidParameterError);
}

TEST_CASE("convolution window placement and coverage errors") {
    SpatialGrid grid{-10.0, 10.0, 1000};
    const double alpha = 4.0;
    CHECK_NOTHROW(kernel_window(grid, alpha, 0.0));
    CHECK_NOTHROW(kernel_window(grid, alpha, 6.9));
    CHECK_THROWS_AS(kernel_window(grid, alpha, 7.5), DomainError);
    CHECK_THROWS_AS(kernel_window(grid, alpha, -7.5), DomainError);

    const CellWindow w = kernel_window(grid, alpha, 0.0);
    // 6 kernel widths on both sides at dq = 0.02, width 0.5 -> ~300 cells.
    CHECK(w.last - w.first + 1 > 290);
    CHECK(w.last - w.first + 1 < 310);
}

TEST_CASE("convolve_gradient: zero field and exact discrete variance") {
    SpatialGrid grid{-10.0, 10.0, 1000};
    const double alpha = 1.0;
    const std::vector<double> zeros(grid.n_cells, 0.0);
    CHECK(convolve_gradient(zeros, grid, alpha, 0.3) == 0.0);

    // The exact variance of the weighted sum is dt*dq*sum g_i^2, which must
    // agree with the closed-form integral to quadrature accuracy.
    const double dt = 1.0;
    double sum_g2 = 0.0;
    const CellWindow w = kernel_window(grid, alpha, 0.0);
    for (std::size_t i = w.first; i <= w.last; ++i) {
        const double g = kernel_gradient(alpha, 0.0 - grid.center(i));
        sum_g2 += g * g;
    }
    const double discrete_var = dt * grid.dq() * sum_g2;
    CHECK(discrete_var ==
          doctest::Approx(dt * kernel_gradient_sq_integral(alpha))
              .epsilon(1e-6));
}

TEST_CASE("convolve_gradient: sampled variance and alpha scaling") {
    const double dt = 1.0;
    const std::size_t reps = 100000;

    auto sampled_var = [&](double alpha, std::uint64_t seed) {
        SpatialGrid grid{-10.0, 10.0, 1200};
        FieldSampler sampler(SeedPolicy{seed, 0});
        std::vector<double> cells(grid.n_cells);
        std::vector<double> vals(reps);
        const CellWindow w = kernel_window(grid, alpha, 0.0);
        std::vector<double> window(w.last - w.first + 1);
        for (std::size_t r = 0; r < reps; ++r) {
            sampler.fill_cells(r, w.first, window, dt, grid.dq());
            vals[r] =
                convolve_gradient_window(window, w, grid, alpha, 0.0);
        }
        return variance(vals);
    };

    const double v1 = sampled_var(1.0, 900);
    CHECK(v1 == doctest::Approx(1.0 / (4.0 * std::sqrt(std::numbers::pi)))
                    .epsilon(0.02));

    const double v4 = sampled_var(4.0, 901);
    CHECK(v4 / v1 == doctest::Approx(8.0).epsilon(0.05));
}

TEST_CASE("convolve_gradient: grid-refinement robustness") {
    const double dt = 0.5;
    const double alpha = 2.0;
    const std::size_t reps = 40000;
    auto sampled_var = [&](std::size_t n_cells, std::uint64_t seed) {
        SpatialGrid grid{-8.0, 8.0, n_cells};
        FieldSampler sampler(SeedPolicy{seed, 0});
        const CellWindow w = kernel_window(grid, alpha, 0.37);
        std::vector<double> window(w.last - w.first + 1);
        std::vector<double> vals(reps);
        for (std::size_t r = 0; r < reps; ++r) {
            sampler.fill_cells(r, w.first, window, dt, grid.dq());
            vals[r] =
                convolve_gradient_window(window, w, grid, alpha, 0.37);
        }
        return variance(vals);
    };
    const double v = sampled_var(800, 1000);
    const double v2 = sampled_var(1600, 1001);
    const double rel_se = std::sqrt(2.0 / static_cast<double>(reps));
    CHECK(std::abs(v2 - v) < 4.0 * rel_se * v);
}

TEST_CASE("bridge identity: field term reproduces the momentum-rate form") {
    // 4 nu^2 gamma * Var(convolve)/dt == hbar^2 alpha lambda / (2 m^2).
    // Var(convolve)/dt is evaluated exactly as dq * sum g_i^2.
    for (double alpha : {1.0, 6.0}) {
        PhysParams params;
        params.alpha = alpha;
        params.lambda = 1.3;
        params.mass = 1.7;
        params.hbar = 0.9;

        SpatialGrid grid{-10.0, 10.0, 4000};
        const CellWindow w = kernel_window(grid, alpha, 0.0);
        double sum_g2 = 0.0;
        for (std::size_t i = w.first; i <= w.last; ++i) {
            const double g = kernel_gradient(alpha, 0.0 - grid.center(i));
            sum_g2 += g * g;
        }
        const double var_over_dt = grid.dq() * sum_g2;
        const double nu_v = nu(params);
        const double lhs =
            4.0 * nu_v * nu_v * derive_gamma(params) * var_over_dt;
        const double rhs = params.hbar * params.hbar * alpha * params.lambda /
                           (2.0 * params.mass * params.mass);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
    }
}

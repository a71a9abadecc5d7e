#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "csl/errors.hpp"
#include "csl/params.hpp"

using namespace csl;

TEST_CASE("gamma from the localization parameters") {
    // 4 pi / alpha = 1 makes the square root drop out.
    PhysParams p;
    p.alpha = 4.0 * std::numbers::pi;
    p.lambda = 1.0;
    CHECK(derive_gamma(p) == doctest::Approx(1.0).epsilon(1e-15));

    p.lambda = 0.0;
    p.alpha = 3.7;
    CHECK(derive_gamma(p) == 0.0);

    // Independent high-precision evaluation of lambda sqrt(4 pi / alpha).
    p.alpha = 1.0;
    p.lambda = 2.0;
    const long double oracle =
        2.0L * std::sqrt(4.0L * 3.14159265358979323846264338327950288L);
    CHECK(derive_gamma(p) ==
          doctest::Approx(static_cast<double>(oracle)).epsilon(1e-14));
    CHECK(derive_gamma(p) == doctest::Approx(7.0898154036220635).epsilon(1e-12));

    p.alpha = -1.0;
    CHECK_THROWS_AS(derive_gamma(p), InvalidParameterError);
    p.alpha = 0.0;
    CHECK_THROWS_AS(derive_gamma(p), InvalidParameterError);
}

TEST_CASE("gamma round trip") {
    PhysParams p;
    for (double alpha : {0.25, 1.0, 6.0, 1e4}) {
        for (double lambda : {0.1, 1.0, 42.0}) {
            p.alpha = alpha;
            p.lambda = lambda;
            const double recovered =
                derive_gamma(p) * std::sqrt(alpha / (4.0 * std::numbers::pi));
            CHECK(recovered == doctest::Approx(lambda).epsilon(1e-13));
        }
    }
}

TEST_CASE("mean energy input") {
    PhysParams p;
    p.alpha = 6.0;
    p.lambda = 1.0;
    CHECK(mean_energy_input(p) == doctest::Approx(1.0).epsilon(1e-15));

    p.lambda = 0.0;
    CHECK(mean_energy_input(p) == 0.0);

    // GRW-scale constants in cgs: alpha ~ 1e10 cm^-2, lambda ~ 1e-16 s^-1,
    // proton mass. Oracle evaluated step by step in extended precision.
    p.alpha = 1e10;
    p.lambda = 1e-16;
    p.hbar = 1.0545718e-27;
    p.mass = 1.67262192369e-24;
    const long double h = 1.0545718e-27L;
    const long double m = 1.67262192369e-24L;
    const long double oracle = 1e10L * 1e-16L * h * h / (6.0L * m * m);
    CHECK(mean_energy_input(p) ==
          doctest::Approx(static_cast<double>(oracle)).epsilon(1e-12));
}

TEST_CASE("analytic rate coefficients") {
    PhysParams p;
    p.alpha = 6.0;
    p.lambda = 1.0;
    CHECK(analytic_rates(p).msd_cubic_coeff == doctest::Approx(1.0));

    p.alpha = 2.0;
    CHECK(analytic_rates(p).p_var_rate == doctest::Approx(1.0));
    CHECK(analytic_rates(p).xp_cov_rate == doctest::Approx(1.0));
    CHECK(analytic_rates(p).x_var_rate == doctest::Approx(1.0));

    p.lambda = 0.0;
    const AnalyticRates off = analytic_rates(p);
    CHECK(off.p_var_rate == 0.0);
    CHECK(off.xp_cov_rate == 0.0);
    CHECK(off.msd_cubic_coeff == 0.0);
    CHECK(off.x_var_rate == doctest::Approx(p.hbar / p.mass));
}

TEST_CASE("rates scale correctly with mass") {
    PhysParams p;
    p.alpha = 5.0;
    p.lambda = 0.7;
    p.mass = 1.0;
    const AnalyticRates r1 = analytic_rates(p);
    p.mass = 2.0;
    const AnalyticRates r2 = analytic_rates(p);
    CHECK(r1.msd_cubic_coeff / r2.msd_cubic_coeff ==
          doctest::Approx(4.0).epsilon(1e-14));
    CHECK(r1.x_var_rate / r2.x_var_rate == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("energy input equals the cubic MSD coefficient") {
    PhysParams p;
    for (double alpha : {0.5, 2.0, 6.0}) {
        for (double mass : {0.5, 1.0, 3.0}) {
            p.alpha = alpha;
            p.mass = mass;
            p.lambda = 1.3;
            CHECK(mean_energy_input(p) == analytic_rates(p).msd_cubic_coeff);
        }
    }
}

TEST_CASE("parameter validation") {
    PhysParams p;
    p.hbar = 0.0;
    CHECK_THROWS_AS(validate(p), InvalidParameterError);
    p = PhysParams{};
    p.mass = -1.0;
    CHECK_THROWS_AS(validate(p), InvalidParameterError);
    p = PhysParams{};
    p.lambda = -0.1;
    CHECK_THROWS_AS(validate(p), InvalidParameterError);
    p = PhysParams{};
    CHECK_NOTHROW(validate(p));
    p.lambda = 0.0; // CSL off is a valid configuration
    CHECK_NOTHROW(validate(p));
}

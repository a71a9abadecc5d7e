#include "csl/params.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "csl/errors.hpp"

namespace csl {

void validate(const PhysParams& params) {
    if (!(params.hbar > 0.0) || !std::isfinite(params.hbar))
        throw InvalidParameterError("hbar must be positive, got " +
                                    std::to_string(params.hbar));
    if (!(params.mass > 0.0) || !std::isfinite(params.mass))
        throw InvalidParameterError("mass must be positive, got " +
                                    std::to_string(params.mass));
    if (!(params.alpha > 0.0) || !std::isfinite(params.alpha))
        throw InvalidParameterError("alpha must be positive, got " +
                                    std::to_string(params.alpha));
    if (!(params.lambda >= 0.0) || !std::isfinite(params.lambda))
        throw InvalidParameterError("lambda must be non-negative, got " +
                                    std::to_string(params.lambda));
    if (!std::isfinite(params.p0))
        throw InvalidParameterError("p0 must be finite");
}

double derive_gamma(const PhysParams& params) {
    if (!(params.alpha > 0.0))
        throw InvalidParameterError("derive_gamma requires alpha > 0");
    validate(params);
    return params.lambda * std::sqrt(4.0 * std::numbers::pi / params.alpha);
}

double nu(const PhysParams& params) {
    validate(params);
    return params.hbar / (2.0 * params.mass);
}

double mean_energy_input(const PhysParams& params) {
    validate(params);
    return params.alpha * params.lambda * params.hbar * params.hbar /
           (6.0 * params.mass * params.mass);
}

AnalyticRates analytic_rates(const PhysParams& params) {
    validate(params);
    const double h = params.hbar;
    const double m = params.mass;
    const double al = params.alpha * params.lambda;
    return AnalyticRates{
        .msd_cubic_coeff = al * h * h / (6.0 * m * m),
        .p_var_rate = h * h * al / 2.0,
        .x_var_rate = h / m,
        .xp_cov_rate = std::sqrt(h * h * h * al / (2.0 * m)),
    };
}

} // namespace csl

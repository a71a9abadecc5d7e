#ifndef CSL_PARAMS_HPP
#define CSL_PARAMS_HPP

namespace csl {

// Physical constants and model parameters, in one units convention.
// Defaults are the desk-scale choice hbar = m = 1 with O(1) localization
// parameters, which make the cubic-in-time diffusion term visible over a
// couple of time units. `p0` is the constant drift momentum of the position
// equation; it is a fixed model constant, not the momentum variable.
struct PhysParams {
    double hbar = 1.0;
    double mass = 1.0;
    double alpha = 6.0;   // localization kernel width parameter [1/length^2]
    double lambda = 1.0;  // localization rate [1/time]; 0 switches CSL off
    double p0 = 0.0;      // constant drift momentum

    bool operator==(const PhysParams&) const = default;
};

// Throws InvalidParameterError unless hbar > 0, mass > 0, alpha > 0,
// lambda >= 0 and p0 is finite.
void validate(const PhysParams& params);

// gamma = lambda * sqrt(4*pi / alpha), the noise strength derived from the
// localization parameters.
double derive_gamma(const PhysParams& params);

// nu = hbar / (2 m).
double nu(const PhysParams& params);

// Mean energy input per unit time and unit mass injected by the
// localization noise: alpha*lambda*hbar^2 / (6 m^2). Equal to the cubic
// coefficient of the mean-square-displacement growth law.
double mean_energy_input(const PhysParams& params);

// Closed-form rate coefficients of the ensemble dynamics.
struct AnalyticRates {
    double msd_cubic_coeff;  // alpha*lambda*hbar^2/(6 m^2), of <x^2> ~ c t^3
    double p_var_rate;       // hbar^2*alpha*lambda/2, of Var(p) ~ r t
    double x_var_rate;       // hbar/m, of Var(x) ~ r t (Markovian part)
    double xp_cov_rate;      // sqrt(hbar^3*alpha*lambda/(2 m)), of Cov(x,p)
};

AnalyticRates analytic_rates(const PhysParams& params);

} // namespace csl

#endif

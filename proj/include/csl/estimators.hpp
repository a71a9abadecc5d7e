#ifndef CSL_ESTIMATORS_HPP
#define CSL_ESTIMATORS_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace csl {

// Ensemble statistics at one output time. Standard errors of the variance
// estimates come from the fourth-moment formula
// Var(v^) = (m4 - m2^2 (n-3)/(n-1)) / n.
struct MomentRow {
    double t = 0.0;
    double mean_x = 0.0;
    double var_x = 0.0;
    double mean_p = 0.0;
    double var_p = 0.0;
    double cov_xp = 0.0;
    double se_var_x = 0.0;
    double se_var_p = 0.0;
    std::size_t n = 0;

    bool operator==(const MomentRow&) const = default;
};

struct EnsembleMoments {
    std::vector<MomentRow> rows;

    std::vector<double> times() const;

    bool operator==(const EnsembleMoments&) const = default;
};

// Checks times strictly increasing, variances non-negative and the
// Cauchy-Schwarz bound |cov| <= sqrt(var_x var_p). Throws Error.
void validate(const EnsembleMoments& moments);

// Pointwise difference of moment tables from a CSL run and its matched
// Schroedinger baseline, with combined standard errors.
struct ExcessRow {
    double t = 0.0;
    double excess_var_x = 0.0;
    double excess_var_p = 0.0;
    double se_x = 0.0;
    double se_p = 0.0;
};

// Requires identical time grids (throws DomainError otherwise).
std::vector<ExcessRow> excess_moments(const EnsembleMoments& full,
                                      const EnsembleMoments& baseline);

struct FitWindow {
    double t_lo = 0.0;
    double t_hi = 0.0;

    bool operator==(const FitWindow&) const = default;
};

// Default window: the upper half of the positive time range in log space,
// [sqrt(t_min t_max), t_max].
FitWindow default_fit_window(std::span<const double> times);

// Power-law fit y = amplitude * t^exponent by least squares of log y on
// log t, weighted by 1/se(log y)^2 when per-point standard errors are
// supplied (all positive), unweighted otherwise.
struct FitResult {
    double exponent = 0.0;
    double amplitude = 0.0; // fitted value at t = 1
    double exponent_se = 0.0;
    double amplitude_se = 0.0;
    double r_squared = 0.0;
    FitWindow window;
};

// `se` may be empty (unweighted fit). Points with t outside the window are
// ignored; a non-positive y inside the window throws FitDomainError; fewer
// than 5 usable points throws InsufficientDataError.
FitResult fit_power_law(std::span<const double> t, std::span<const double> y,
                        std::span<const double> se, const FitWindow& window);

// Intermittency map A = 1 + 3 mu / (4 - mu) with codimension
// mu = euclidean_dim - fractal_dim. Throws InvalidParameterError for
// mu < 0 and DomainError at the mu >= 4 pole.
double intermittency_exponent(double euclidean_dim, double fractal_dim);

// Scaling exponents implied by an affine-noise exponent A:
// excess <x^2> ~ t^(A+2), excess <p^2> ~ t^A.
struct PredictedExponents {
    double x2_exponent;
    double p2_exponent;
};

PredictedExponents predicted_exponents(double A);

} // namespace csl

#endif

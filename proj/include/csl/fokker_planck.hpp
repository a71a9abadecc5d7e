#ifndef CSL_FOKKER_PLANCK_HPP
#define CSL_FOKKER_PLANCK_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "csl/dynamics.hpp"
#include "csl/params.hpp"
#include "csl/rng.hpp"

namespace csl {

// Cell-centered phase-space grid, x along rows and p along columns.
struct PhaseGrid {
    double x_min = -12.0;
    double x_max = 12.0;
    std::size_t n_x = 256;
    double p_min = -12.0;
    double p_max = 12.0;
    std::size_t n_p = 256;

    double dx() const { return (x_max - x_min) / static_cast<double>(n_x); }
    double dp() const { return (p_max - p_min) / static_cast<double>(n_p); }
    double x_center(std::size_t i) const {
        return x_min + (static_cast<double>(i) + 0.5) * dx();
    }
    double p_center(std::size_t j) const {
        return p_min + (static_cast<double>(j) + 0.5) * dp();
    }

    bool operator==(const PhaseGrid&) const = default;
};

// n_x, n_p >= 32 and sane extents.
void validate(const PhaseGrid& grid);

// Discretized phase-space probability density. density[i * n_p + j] is the
// value at cell (i, j). The cross-derivative stencil can undershoot zero
// slightly in the far tails; stepping tracks the worst value seen and the
// state is flagged once it passes -1e-12.
struct FPEState {
    PhaseGrid grid;
    std::vector<double> density;
    double t = 0.0;
    double worst_undershoot = 0.0;

    double mass() const;
    bool undershoot_flagged() const { return worst_undershoot < -1e-12; }
};

// Normalized Gaussian product density; requires sigma_x >= 2 dx and
// sigma_p >= 2 dp so the initial condition is resolvable.
FPEState fpe_init(const PhaseGrid& grid, double x0, double p0_mean,
                  double sigma_x, double sigma_p);

// Coefficients of the phase-space equation
//   dP/dt = -advection dP/dx + d_xx d2P/dx2 + d_xp d2P/dxdp + d_pp d2P/dp2.
struct FpeCoefficients {
    double advection = 0.0; // p0 / m
    double d_xx = 0.0;      // hbar / 2m
    double d_xp = 0.0;      // sqrt(hbar^3 alpha lambda / 2m)
    double d_pp = 0.0;      // hbar^2 alpha lambda / 4
};

FpeCoefficients fpe_coefficients(const PhysParams& params);

// Largest time step the explicit scheme accepts (0.4 safety factor on each
// operator's bound, including the cross-term condition).
double fpe_stable_dt(const PhaseGrid& grid, const FpeCoefficients& coeffs);
double fpe_stable_dt(const PhaseGrid& grid, const PhysParams& params);

// One explicit step in conservative (flux) form: second-order central
// differences everywhere, the standard 4-point stencil for the cross term,
// zero-flux boundaries. Mass is conserved to roundoff. Refuses to step
// (ConfigError) if dt violates the stability bound.
FPEState fpe_step(const FPEState& state, const FpeCoefficients& coeffs,
                  double dt);
FPEState fpe_step(const FPEState& state, const PhysParams& params, double dt);

struct PhaseMoments {
    double mean_x = 0.0;
    double mean_p = 0.0;
    double var_x = 0.0;
    double var_p = 0.0;
    double cov_xp = 0.0;
};

// Quadrature moments of the discrete density.
PhaseMoments fpe_moments(const FPEState& state);

// Largest boundary-cell density divided by the peak density; the domain is
// considered wide enough while this stays below 1e-8.
double boundary_density_ratio(const FPEState& state);

double min_density(const FPEState& state);

// Block-aggregates density onto a factor-times-coarser grid (n_x and n_p
// must be divisible by factor). Mass preserving; used to compare against
// Monte Carlo histograms above the binning-noise floor.
FPEState coarsen(const FPEState& state, std::size_t factor);

// L1 distance between two densities on the same grid (DomainError if the
// grids differ): integral of |a - b|, in [0, 2] for probability densities.
double l1_distance(const FPEState& a, const FPEState& b);

struct HistogramComparison {
    double l1_distance = 0.0;
    double l1_marginal_x = 0.0;
    double l1_marginal_p = 0.0;
    std::size_t n_outside = 0; // sample points off the grid
};

// Bins the Monte Carlo sample onto the state's grid and reports L1
// distances between the normalized histogram and the density. Points off
// the grid are counted as lost histogram mass.
HistogramComparison compare_histogram(std::span<const PhasePoint> sample,
                                      const FPEState& state);

// Draws n points from the discrete density (cell probabilities, uniform
// within a cell). Used to calibrate the binning-noise floor of
// compare_histogram.
std::vector<PhasePoint> sample_from_density(const FPEState& state,
                                            std::size_t n,
                                            const SeedPolicy& seed);

} // namespace csl

#endif

#ifndef CSL_DYNAMICS_HPP
#define CSL_DYNAMICS_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "csl/estimators.hpp"
#include "csl/kernel_field.hpp"
#include "csl/noise.hpp"
#include "csl/params.hpp"
#include "csl/rng.hpp"

namespace csl {

// Per-walker phase-space state. `field_accum` is the running value of the
// bracketed time integral of the position equation: the accumulated
// field-gradient term Y in FullField mode, and directly the integrated
// noise velocity U = 2 nu sqrt(gamma) Y in Effective mode. Unused (and
// kept at zero) in MarkovianOnly mode.
struct TrajectoryState {
    double x = 0.0;
    double p = 0.0;
    double field_accum = 0.0;
    double t = 0.0;
};

enum class SimMode { FullField, Effective, MarkovianOnly };

// Initial phase-space distribution: independent Gaussians, point mass when
// the spreads are zero.
struct InitialCondition {
    double x0 = 0.0;
    double sigma_x = 0.0;
    double p_mean = 0.0;
    double sigma_p = 0.0;

    bool operator==(const InitialCondition&) const = default;
};

struct SimConfig {
    PhysParams params;
    NoiseSpec noise_dB;  // field noise (scalar reduced form in Effective)
    NoiseSpec noise_dw;  // shared white noise of both equations
    SimMode mode = SimMode::Effective;
    std::size_t n_trajectories = 10000;
    TimeGrid time{2000, 1e-3};
    SpatialGrid grid;    // FullField only
    std::uint64_t master_seed = 0;
    InitialCondition initial;
    // Moments are recorded every `output_every` steps (plus t = 0 and the
    // final step); 0 picks a default of about 200 output times.
    std::size_t output_every = 0;
    // Re-sum the field history against the current position each step
    // instead of freezing contributions at the position where they were
    // generated. O(n_steps) per step; for sensitivity studies only.
    bool reconvolve = false;
    std::size_t workers = 0; // 0 = hardware concurrency

    bool operator==(const SimConfig&) const = default;
};

// Throws unless the config is usable in its mode (parameters valid, grid
// resolves the kernel in FullField, deterministic per-step drift < dq, ...).
void validate(const SimConfig& cfg);

// One Euler-Maruyama step with an explicit field increment array covering
// the whole grid. The same dw drives both the position and momentum
// updates.
TrajectoryState step_full(const TrajectoryState& state, const SimConfig& cfg,
                          std::span<const double> dB_field, double dw);

// Reduced form: the field term collapses to a scalar Brownian velocity
// with variance rate hbar^2 alpha lambda / (2 m^2), driven by dxi.
TrajectoryState step_effective(const TrajectoryState& state,
                               const SimConfig& cfg, double dxi, double dw);

// Markovian subsystem: field term omitted, shared dw retained.
TrajectoryState step_markovian(const TrajectoryState& state,
                               const SimConfig& cfg, double dw);

struct EnsembleResult {
    EnsembleMoments moments;
    std::size_t n_diverged = 0;
    std::vector<std::size_t> diverged_indices;
};

// Runs cfg.n_trajectories independent walkers (independent dB and dw
// streams per trajectory) and records ensemble moments at the output
// times. Deterministic for a fixed master seed regardless of worker
// count. Diverged trajectories are excluded from the statistics; the run
// fails with DivergenceError if more than 0.1% diverge.
EnsembleResult simulate_ensemble(const SimConfig& cfg);

// Same dynamics with the CSL terms switched off (lambda forced to zero)
// and matched seeds, so the dw realizations are common random numbers
// with the paired full run. FullField configs fall back to Effective mode
// internally; with gamma = 0 the two are identical and the field draws
// are skipped.
EnsembleResult schrodinger_baseline(const SimConfig& cfg);

struct PhasePoint {
    double x = 0.0;
    double p = 0.0;
};

// Final (x, p) of every trajectory, for histogram comparisons against the
// Fokker-Planck solver. Same streams and stepping as simulate_ensemble.
std::vector<PhasePoint> simulate_endpoints(const SimConfig& cfg);

} // namespace csl

#endif

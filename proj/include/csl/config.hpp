#ifndef CSL_CONFIG_HPP
#define CSL_CONFIG_HPP

#include <cstdint>
#include <string>

#include "csl/dynamics.hpp"
#include "csl/estimators.hpp"
#include "csl/fokker_planck.hpp"

namespace csl {

// Simulation section of the experiment config (the physical parameters,
// seed and worker count live at the top level and are injected into
// SimConfig by sim_config()).
struct SimSection {
    NoiseSpec noise_dB;
    NoiseSpec noise_dw;
    SimMode mode = SimMode::Effective;
    std::size_t n_trajectories = 10000;
    TimeGrid time{2000, 1e-3};
    SpatialGrid grid;
    InitialCondition initial;
    std::size_t output_every = 10;
    bool reconvolve = false;

    bool operator==(const SimSection&) const = default;
};

// Fokker-Planck stage. Carries its own alpha/lambda: the solver is
// validated against the Markovian subsystem at its own desk-scale
// parameter point, independent of the main simulation sweep.
struct FpeSection {
    double alpha = 2.0;
    double lambda = 1.0;
    PhaseGrid grid;
    double init_x0 = 0.0;
    double init_p_mean = 0.0;
    double init_sigma_x = 0.5;
    double init_sigma_p = 0.5;
    double t_final = 1.0;
    double dt = 0.0; // 0 = largest stable step
    std::size_t snapshot_every = 0;
    std::size_t compare_n_trajectories = 100000;
    double compare_mc_dt = 0.005;
    std::size_t compare_coarsen = 4;

    bool operator==(const FpeSection&) const = default;
};

struct FitSection {
    FitWindow window{0.0, 0.0}; // both 0 = default window

    bool operator==(const FitSection&) const = default;
};

// Everything a run needs, serializable to a flat key-value file with
// dotted section keys. Every field has a default; a minimal file sets
// only run_name.
struct ExperimentConfig {
    std::string run_name = "run";
    std::uint64_t seed = 1;
    std::string outputs; // "" = CSL_DIFFUSION_OUT or ./out
    std::size_t workers = 0;
    PhysParams params;
    SimSection sim;
    FpeSection fpe;
    FitSection fit;

    bool operator==(const ExperimentConfig&) const = default;

    SimConfig sim_config() const;

    // MarkovianOnly ensemble matched to the FPE stage (same parameters,
    // initial condition and final time).
    SimConfig fpe_compare_config() const;

    PhysParams fpe_params() const;
};

// Parses the flat config text. Unknown keys, duplicates and malformed
// lines raise ConfigError with the line number.
ExperimentConfig parse_config(const std::string& text);

// Canonical serialization (every key, fixed order); round-trips exactly
// through parse_config.
std::string serialize_config(const ExperimentConfig& config);

// Output directory resolution: explicit value, else $CSL_DIFFUSION_OUT,
// else "./out".
std::string resolve_output_root(const ExperimentConfig& config);

} // namespace csl

#endif

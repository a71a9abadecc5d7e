#include "csl/dynamics.hpp"

#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "csl/errors.hpp"

namespace csl {

namespace {

constexpr std::size_t kBlockSize = 64;
constexpr double kMaxDivergedFraction = 1e-3;

struct StepCoeffs {
    double dt;
    double drift_v;           // p0 / m
    double diff_x;            // sqrt(2 nu)
    double kick_p;            // hbar sqrt(alpha lambda / 2)
    double sigma_u;           // sqrt(hbar^2 alpha lambda / (2 m^2))
    double two_nu_sqrt_gamma; // 2 nu sqrt(gamma)
};

StepCoeffs make_step_coeffs(const PhysParams& params, double dt) {
    const double al = params.alpha * params.lambda;
    const double nu_v = params.hbar / (2.0 * params.mass);
    return StepCoeffs{
        .dt = dt,
        .drift_v = params.p0 / params.mass,
        .diff_x = std::sqrt(2.0 * nu_v),
        .kick_p = params.hbar * std::sqrt(al / 2.0),
        .sigma_u = (params.hbar / params.mass) * std::sqrt(al / 2.0),
        .two_nu_sqrt_gamma = 2.0 * nu_v * std::sqrt(derive_gamma(params)),
    };
}

inline TrajectoryState do_step_effective(const TrajectoryState& s,
                                         const StepCoeffs& c, double dxi,
                                         double dw) {
    TrajectoryState out;
    out.field_accum = s.field_accum + c.sigma_u * dxi;
    out.x = s.x + c.drift_v * c.dt + out.field_accum * c.dt + c.diff_x * dw;
    out.p = s.p + c.kick_p * dw;
    out.t = s.t + c.dt;
    return out;
}

inline TrajectoryState do_step_full(const TrajectoryState& s,
                                    const StepCoeffs& c, double dY,
                                    double dw) {
    TrajectoryState out;
    out.field_accum = s.field_accum + dY;
    out.x = s.x + c.drift_v * c.dt +
            c.two_nu_sqrt_gamma * out.field_accum * c.dt + c.diff_x * dw;
    out.p = s.p + c.kick_p * dw;
    out.t = s.t + c.dt;
    return out;
}

inline TrajectoryState do_step_markovian(const TrajectoryState& s,
                                         const StepCoeffs& c, double dw) {
    TrajectoryState out;
    out.field_accum = s.field_accum;
    out.x = s.x + c.drift_v * c.dt + c.diff_x * dw;
    out.p = s.p + c.kick_p * dw;
    out.t = s.t + c.dt;
    return out;
}

inline bool state_finite(const TrajectoryState& s) {
    return std::isfinite(s.x) && std::isfinite(s.p) &&
           std::isfinite(s.field_accum);
}

void check_state(const TrajectoryState& s) {
    if (!state_finite(s))
        throw DivergenceError("trajectory state non-finite at t = " +
                              std::to_string(s.t));
}

std::vector<std::size_t> output_steps_for(const SimConfig& cfg) {
    std::size_t every = cfg.output_every;
    if (every == 0) every = std::max<std::size_t>(1, cfg.time.n_steps / 200);
    std::vector<std::size_t> steps;
    for (std::size_t s = 0; s <= cfg.time.n_steps; s += every)
        steps.push_back(s);
    if (steps.back() != cfg.time.n_steps) steps.push_back(cfg.time.n_steps);
    return steps;
}

// Resolved execution plan shared read-only by all workers.
struct RunPlan {
    SimConfig cfg;
    StepCoeffs coeffs;
    std::vector<std::size_t> output_steps;
    std::shared_ptr<const FgnSynthesizer> synth_dw;
    std::shared_ptr<const FgnSynthesizer> synth_dB;
    bool draw_dxi = false; // Effective mode needs dB-role scalar draws
    SimMode mode = SimMode::Effective;
};

RunPlan make_plan(SimConfig cfg) {
    validate(cfg);
    RunPlan plan;
    plan.mode = cfg.mode;
    // With lambda = 0 every CSL term carries a zero coefficient; the field
    // dynamics degenerates to the effective form exactly, so the field
    // draws can be skipped.
    if (cfg.params.lambda == 0.0 && plan.mode == SimMode::FullField)
        plan.mode = SimMode::Effective;
    plan.coeffs = make_step_coeffs(cfg.params, cfg.time.dt);
    plan.output_steps = output_steps_for(cfg);
    const bool csl_on = cfg.params.lambda > 0.0;
    if (cfg.noise_dw.kind == NoiseKind::Affine)
        plan.synth_dw = std::make_shared<FgnSynthesizer>(
            cfg.noise_dw.exponent, cfg.time.n_steps, cfg.time.dt);
    plan.draw_dxi = plan.mode == SimMode::Effective && csl_on;
    if (plan.draw_dxi && cfg.noise_dB.kind == NoiseKind::Affine) {
        if (plan.synth_dw && cfg.noise_dB.exponent == cfg.noise_dw.exponent)
            plan.synth_dB = plan.synth_dw;
        else
            plan.synth_dB = std::make_shared<FgnSynthesizer>(
                cfg.noise_dB.exponent, cfg.time.n_steps, cfg.time.dt);
    }
    plan.cfg = std::move(cfg);
    return plan;
}

// Scratch buffers reused across the trajectories a worker runs.
struct Workspace {
    std::vector<double> dw;
    std::vector<double> dxi;
    std::vector<double> window;
    std::vector<TrajectoryState> at_outputs;
};

enum class TrajectoryOutcome { Ok, NonFinite, LeftGrid };

TrajectoryOutcome run_one(const RunPlan& plan, std::size_t traj,
                          Workspace& ws) {
    const SimConfig& cfg = plan.cfg;
    const StepCoeffs& c = plan.coeffs;
    const std::size_t n = cfg.time.n_steps;
    const SeedPolicy seed{cfg.master_seed, traj};

    TrajectoryState state;
    state.x = cfg.initial.x0;
    state.p = cfg.initial.p_mean;
    if (cfg.initial.sigma_x > 0.0 || cfg.initial.sigma_p > 0.0) {
        RandomStream init(seed, NoiseRole::Init);
        if (cfg.initial.sigma_x > 0.0)
            state.x += cfg.initial.sigma_x * init.normal();
        if (cfg.initial.sigma_p > 0.0)
            state.p += cfg.initial.sigma_p * init.normal();
    }

    if (plan.synth_dw)
        ws.dw = plan.synth_dw->sample(seed, NoiseRole::Dw);
    else
        ws.dw = white_increments(n, cfg.time.dt, seed, NoiseRole::Dw);
    if (plan.draw_dxi) {
        if (plan.synth_dB)
            ws.dxi = plan.synth_dB->sample(seed, NoiseRole::DB);
        else
            ws.dxi = white_increments(n, cfg.time.dt, seed, NoiseRole::DB);
    }

    FieldSampler field(seed, NoiseRole::DB);
    const double dq = cfg.grid.dq();

    ws.at_outputs.clear();
    ws.at_outputs.reserve(plan.output_steps.size());
    std::size_t next_out = 0;
    if (plan.output_steps[0] == 0) {
        ws.at_outputs.push_back(state);
        ++next_out;
    }

    for (std::size_t s = 1; s <= n; ++s) {
        switch (plan.mode) {
        case SimMode::Effective:
            state = do_step_effective(
                state, c, plan.draw_dxi ? ws.dxi[s - 1] : 0.0, ws.dw[s - 1]);
            break;
        case SimMode::MarkovianOnly:
            state = do_step_markovian(state, c, ws.dw[s - 1]);
            break;
        case SimMode::FullField: {
            CellWindow w;
            try {
                w = kernel_window(cfg.grid, cfg.params.alpha, state.x);
            } catch (const DomainError&) {
                return TrajectoryOutcome::LeftGrid;
            }
            ws.window.resize(w.last - w.first + 1);
            double dY;
            if (!cfg.reconvolve) {
                // Frozen accumulation: each step's convolution is evaluated
                // at the position where the increment was generated and
                // never revisited.
                field.fill_cells(s - 1, w.first, ws.window, cfg.time.dt, dq);
                dY = convolve_gradient_window(ws.window, w, cfg.grid,
                                              cfg.params.alpha, state.x);
            } else {
                // Re-sum the entire field history against the current
                // position. Past increments are regenerated on demand from
                // their counters, so this costs O(steps) per step but no
                // memory.
                double y_now = 0.0;
                for (std::size_t past = 0; past < s; ++past) {
                    field.fill_cells(past, w.first, ws.window, cfg.time.dt,
                                     dq);
                    y_now += convolve_gradient_window(
                        ws.window, w, cfg.grid, cfg.params.alpha, state.x);
                }
                dY = y_now - state.field_accum;
            }
            state = do_step_full(state, c, dY, ws.dw[s - 1]);
            break;
        }
        }
        if (!state_finite(state)) return TrajectoryOutcome::NonFinite;
        state.t = static_cast<double>(s) * cfg.time.dt;
        if (next_out < plan.output_steps.size() &&
            plan.output_steps[next_out] == s) {
            ws.at_outputs.push_back(state);
            ++next_out;
        }
    }
    return TrajectoryOutcome::Ok;
}

struct BlockSums {
    // Raw power sums per output time: x, x^2, x^3, x^4, p, p^2, p^3, p^4, xp.
    std::vector<std::array<double, 9>> sums;
    std::vector<std::size_t> diverged;
    std::size_t n_alive = 0;

    void init(std::size_t n_out) {
        sums.assign(n_out, std::array<double, 9>{});
    }

    void add(const std::vector<TrajectoryState>& traj_outputs) {
        for (std::size_t k = 0; k < traj_outputs.size(); ++k) {
            const double x = traj_outputs[k].x;
            const double p = traj_outputs[k].p;
            auto& s = sums[k];
            const double x2 = x * x;
            const double p2 = p * p;
            s[0] += x;
            s[1] += x2;
            s[2] += x2 * x;
            s[3] += x2 * x2;
            s[4] += p;
            s[5] += p2;
            s[6] += p2 * p;
            s[7] += p2 * p2;
            s[8] += x * p;
        }
    }
};

// Runs trajectory blocks across workers; per-block results land in
// index-addressed slots, so the final reduction order (and therefore every
// output bit) is independent of the number of workers.
template <typename PerTrajectory>
void run_blocks(const RunPlan& plan, PerTrajectory&& per_trajectory) {
    const std::size_t n_traj = plan.cfg.n_trajectories;
    const std::size_t n_blocks = (n_traj + kBlockSize - 1) / kBlockSize;
    std::size_t n_workers =
        plan.cfg.workers ? plan.cfg.workers : std::thread::hardware_concurrency();
    if (n_workers == 0) n_workers = 1;
    n_workers = std::min(n_workers, n_blocks);

    std::atomic<std::size_t> next_block{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&]() {
        Workspace ws;
        try {
            for (;;) {
                const std::size_t b = next_block.fetch_add(1);
                if (b >= n_blocks) break;
                const std::size_t begin = b * kBlockSize;
                const std::size_t end = std::min(begin + kBlockSize, n_traj);
                for (std::size_t traj = begin; traj < end; ++traj)
                    per_trajectory(b, traj, ws);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    };

    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(n_workers);
        for (std::size_t i = 0; i < n_workers; ++i)
            threads.emplace_back(worker);
        for (auto& th : threads) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
}

void throw_if_too_many_diverged(std::size_t n_diverged, std::size_t n_traj) {
    if (static_cast<double>(n_diverged) >
        kMaxDivergedFraction * static_cast<double>(n_traj))
        throw DivergenceError(
            std::to_string(n_diverged) + " of " + std::to_string(n_traj) +
            " trajectories diverged (limit 0.1%)");
}

} // namespace

void validate(const SimConfig& cfg) {
    validate(cfg.params);
    validate(cfg.noise_dB);
    validate(cfg.noise_dw);
    if (cfg.n_trajectories < 2)
        throw InvalidParameterError(
            "need at least 2 trajectories to estimate variances");
    if (cfg.time.n_steps < 1)
        throw InvalidParameterError("need at least one time step");
    if (!(cfg.time.dt > 0.0))
        throw InvalidParameterError("time step dt must be positive");
    if (cfg.initial.sigma_x < 0.0 || cfg.initial.sigma_p < 0.0)
        throw InvalidParameterError("initial spreads must be non-negative");
    if (cfg.mode == SimMode::FullField && cfg.params.lambda > 0.0) {
        validate_grid_for_kernel(cfg.grid, cfg.params.alpha);
        if (cfg.noise_dB.kind == NoiseKind::Affine)
            throw InvalidParameterError(
                "affine field noise is only supported in Effective mode "
                "(per-cell temporal correlations are not implemented)");
        const double drift_step =
            std::abs(cfg.params.p0 / cfg.params.mass) * cfg.time.dt;
        if (drift_step >= cfg.grid.dq())
            throw InvalidParameterError(
                "per-step drift displacement exceeds one field cell; "
                "reduce dt or refine the grid");
    }
}

TrajectoryState step_full(const TrajectoryState& state, const SimConfig& cfg,
                          std::span<const double> dB_field, double dw) {
    check_state(state);
    const double dY =
        convolve_gradient(dB_field, cfg.grid, cfg.params.alpha, state.x);
    const TrajectoryState out = do_step_full(
        state, make_step_coeffs(cfg.params, cfg.time.dt), dY, dw);
    check_state(out);
    return out;
}

TrajectoryState step_effective(const TrajectoryState& state,
                               const SimConfig& cfg, double dxi, double dw) {
    check_state(state);
    const TrajectoryState out = do_step_effective(
        state, make_step_coeffs(cfg.params, cfg.time.dt), dxi, dw);
    check_state(out);
    return out;
}

TrajectoryState step_markovian(const TrajectoryState& state,
                               const SimConfig& cfg, double dw) {
    check_state(state);
    const TrajectoryState out = do_step_markovian(
        state, make_step_coeffs(cfg.params, cfg.time.dt), dw);
    check_state(out);
    return out;
}

EnsembleResult simulate_ensemble(const SimConfig& cfg) {
    const RunPlan plan = make_plan(cfg);
    const std::size_t n_out = plan.output_steps.size();
    const std::size_t n_traj = cfg.n_trajectories;
    const std::size_t n_blocks = (n_traj + kBlockSize - 1) / kBlockSize;

    std::vector<BlockSums> blocks(n_blocks);
    for (auto& b : blocks) b.init(n_out);

    run_blocks(plan, [&](std::size_t b, std::size_t traj, Workspace& ws) {
        const TrajectoryOutcome outcome = run_one(plan, traj, ws);
        if (outcome == TrajectoryOutcome::Ok) {
            blocks[b].add(ws.at_outputs);
            blocks[b].n_alive += 1;
        } else {
            blocks[b].diverged.push_back(traj);
        }
    });

    EnsembleResult result;
    std::size_t n_alive = 0;
    for (auto& b : blocks) {
        n_alive += b.n_alive;
        result.diverged_indices.insert(result.diverged_indices.end(),
                                       b.diverged.begin(), b.diverged.end());
    }
    result.n_diverged = result.diverged_indices.size();
    throw_if_too_many_diverged(result.n_diverged, n_traj);
    if (n_alive < 2)
        throw DivergenceError("fewer than 2 trajectories survived");

    const double n = static_cast<double>(n_alive);
    result.moments.rows.resize(n_out);
    for (std::size_t k = 0; k < n_out; ++k) {
        std::array<double, 9> s{};
        for (const auto& b : blocks)
            for (int j = 0; j < 9; ++j) s[j] += b.sums[k][j];

        MomentRow row;
        row.t = static_cast<double>(plan.output_steps[k]) * cfg.time.dt;
        row.n = n_alive;
        row.mean_x = s[0] / n;
        row.mean_p = s[4] / n;
        const double m2x =
            std::max(0.0, s[1] / n - row.mean_x * row.mean_x);
        const double m2p =
            std::max(0.0, s[5] / n - row.mean_p * row.mean_p);
        row.var_x = m2x * n / (n - 1.0);
        row.var_p = m2p * n / (n - 1.0);
        row.cov_xp =
            (s[8] / n - row.mean_x * row.mean_p) * n / (n - 1.0);
        const double m4x = s[3] / n - 4.0 * row.mean_x * s[2] / n +
                           6.0 * row.mean_x * row.mean_x * s[1] / n -
                           3.0 * std::pow(row.mean_x, 4);
        const double m4p = s[7] / n - 4.0 * row.mean_p * s[6] / n +
                           6.0 * row.mean_p * row.mean_p * s[5] / n -
                           3.0 * std::pow(row.mean_p, 4);
        const double corr = (n - 3.0) / (n - 1.0);
        row.se_var_x = std::sqrt(std::max(0.0, m4x - corr * m2x * m2x) / n);
        row.se_var_p = std::sqrt(std::max(0.0, m4p - corr * m2p * m2p) / n);
        result.moments.rows[k] = row;
    }
    return result;
}

EnsembleResult schrodinger_baseline(const SimConfig& cfg) {
    SimConfig base = cfg;
    base.params.lambda = 0.0;
    if (base.mode == SimMode::FullField) base.mode = SimMode::Effective;
    return simulate_ensemble(base);
}

std::vector<PhasePoint> simulate_endpoints(const SimConfig& cfg) {
    RunPlan plan = make_plan(cfg);
    plan.output_steps = {cfg.time.n_steps};

    const std::size_t n_traj = cfg.n_trajectories;
    std::vector<PhasePoint> points(n_traj);
    std::vector<unsigned char> alive(n_traj, 0);

    run_blocks(plan, [&](std::size_t, std::size_t traj, Workspace& ws) {
        if (run_one(plan, traj, ws) == TrajectoryOutcome::Ok) {
            points[traj] =
                PhasePoint{ws.at_outputs.back().x, ws.at_outputs.back().p};
            alive[traj] = 1;
        }
    });

    std::vector<PhasePoint> out;
    out.reserve(n_traj);
    std::size_t n_diverged = 0;
    for (std::size_t i = 0; i < n_traj; ++i) {
        if (alive[i])
            out.push_back(points[i]);
        else
            ++n_diverged;
    }
    throw_if_too_many_diverged(n_diverged, n_traj);
    return out;
}

} // namespace csl

#include "csl/fokker_planck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "csl/errors.hpp"

namespace csl {

namespace {

constexpr double kStabilitySafety = 0.4;

inline std::size_t idx(const PhaseGrid& g, std::size_t i, std::size_t j) {
    return i * g.n_p + j;
}

} // namespace

void validate(const PhaseGrid& grid) {
    if (!(grid.x_max > grid.x_min) || !(grid.p_max > grid.p_min))
        throw InvalidParameterError("phase grid extents must be increasing");
    if (grid.n_x < 32 || grid.n_p < 32)
        throw InvalidParameterError("phase grid needs at least 32x32 cells");
}

double FPEState::mass() const {
    double acc = 0.0;
    for (double v : density) acc += v;
    return acc * grid.dx() * grid.dp();
}

FPEState fpe_init(const PhaseGrid& grid, double x0, double p0_mean,
                  double sigma_x, double sigma_p) {
    validate(grid);
    if (!(sigma_x >= 2.0 * grid.dx()) || !(sigma_p >= 2.0 * grid.dp()))
        throw InvalidParameterError(
            "initial widths unresolvable: need sigma_x >= 2 dx and "
            "sigma_p >= 2 dp");
    FPEState state;
    state.grid = grid;
    state.t = 0.0;
    state.density.resize(grid.n_x * grid.n_p);
    for (std::size_t i = 0; i < grid.n_x; ++i) {
        const double zx = (grid.x_center(i) - x0) / sigma_x;
        const double gx = std::exp(-0.5 * zx * zx);
        for (std::size_t j = 0; j < grid.n_p; ++j) {
            const double zp = (grid.p_center(j) - p0_mean) / sigma_p;
            state.density[idx(grid, i, j)] = gx * std::exp(-0.5 * zp * zp);
        }
    }
    const double mass = state.mass();
    for (double& v : state.density) v /= mass;
    return state;
}

FpeCoefficients fpe_coefficients(const PhysParams& params) {
    validate(params);
    const double al = params.alpha * params.lambda;
    const double h = params.hbar;
    const double m = params.mass;
    return FpeCoefficients{
        .advection = params.p0 / m,
        .d_xx = h / (2.0 * m),
        .d_xp = std::sqrt(h * h * h * al / (2.0 * m)),
        .d_pp = h * h * al / 4.0,
    };
}

double fpe_stable_dt(const PhaseGrid& grid, const FpeCoefficients& coeffs) {
    validate(grid);
    const double dx = grid.dx();
    const double dp = grid.dp();
    double bound = std::numeric_limits<double>::infinity();
    if (coeffs.d_xx > 0.0) bound = std::min(bound, dx * dx / coeffs.d_xx);
    if (coeffs.d_pp > 0.0) bound = std::min(bound, dp * dp / coeffs.d_pp);
    if (coeffs.advection != 0.0)
        bound = std::min(bound, dx / std::abs(coeffs.advection));
    if (coeffs.d_xp > 0.0) bound = std::min(bound, dx * dp / coeffs.d_xp);
    if (!std::isfinite(bound))
        throw InvalidParameterError(
            "all coefficients vanish; nothing to evolve");
    return kStabilitySafety * bound;
}

double fpe_stable_dt(const PhaseGrid& grid, const PhysParams& params) {
    return fpe_stable_dt(grid, fpe_coefficients(params));
}

FPEState fpe_step(const FPEState& state, const FpeCoefficients& coeffs,
                  double dt) {
    const PhaseGrid& g = state.grid;
    if (state.density.size() != g.n_x * g.n_p)
        throw InvalidParameterError("density array does not match the grid");
    if (!(dt > 0.0)) throw InvalidParameterError("fpe_step needs dt > 0");
    if (dt > fpe_stable_dt(g, coeffs) * (1.0 + 1e-12))
        throw ConfigError(
            "dt = " + std::to_string(dt) +
            " violates the explicit stability bound " +
            std::to_string(fpe_stable_dt(g, coeffs)) +
            "; refusing to step");

    const std::size_t nx = g.n_x;
    const std::size_t np = g.n_p;
    const double dx = g.dx();
    const double dp = g.dp();
    const double inv2dp = 1.0 / (2.0 * dp);
    const double inv2dx = 1.0 / (2.0 * dx);
    const std::vector<double>& P = state.density;

    // dP/dp and dP/dx at cell centers (reflection ghosts at the edges, where
    // the density is required to be negligible anyway).
    auto dpdp_at = [&](std::size_t i, std::size_t j) {
        const double up = j + 1 < np ? P[idx(g, i, j + 1)] : P[idx(g, i, j)];
        const double dn = j > 0 ? P[idx(g, i, j - 1)] : P[idx(g, i, j)];
        return (up - dn) * inv2dp;
    };
    auto dpdx_at = [&](std::size_t i, std::size_t j) {
        const double up = i + 1 < nx ? P[idx(g, i + 1, j)] : P[idx(g, i, j)];
        const double dn = i > 0 ? P[idx(g, i - 1, j)] : P[idx(g, i, j)];
        return (up - dn) * inv2dx;
    };

    // Fluxes on interior faces; boundary faces are zero (reflecting walls).
    // fx[i][j] is the face between cells (i, j) and (i+1, j);
    // fp[i][j] the face between (i, j) and (i, j+1).
    std::vector<double> fx((nx - 1) * np);
    std::vector<double> fp(nx * (np - 1));

    for (std::size_t i = 0; i + 1 < nx; ++i) {
        for (std::size_t j = 0; j < np; ++j) {
            const double pl = P[idx(g, i, j)];
            const double pr = P[idx(g, i + 1, j)];
            double flux = coeffs.advection * 0.5 * (pl + pr);
            flux -= coeffs.d_xx * (pr - pl) / dx;
            if (coeffs.d_xp != 0.0)
                flux -= 0.5 * coeffs.d_xp * 0.5 *
                        (dpdp_at(i, j) + dpdp_at(i + 1, j));
            fx[i * np + j] = flux;
        }
    }
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j + 1 < np; ++j) {
            const double pb = P[idx(g, i, j)];
            const double pt = P[idx(g, i, j + 1)];
            double flux = -coeffs.d_pp * (pt - pb) / dp;
            if (coeffs.d_xp != 0.0)
                flux -= 0.5 * coeffs.d_xp * 0.5 *
                        (dpdx_at(i, j) + dpdx_at(i, j + 1));
            fp[i * (np - 1) + j] = flux;
        }
    }

    FPEState out;
    out.grid = g;
    out.t = state.t + dt;
    out.density.resize(nx * np);
    double min_val = 0.0;
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < np; ++j) {
            const double fx_hi = i + 1 < nx ? fx[i * np + j] : 0.0;
            const double fx_lo = i > 0 ? fx[(i - 1) * np + j] : 0.0;
            const double fp_hi = j + 1 < np ? fp[i * (np - 1) + j] : 0.0;
            const double fp_lo = j > 0 ? fp[i * (np - 1) + j - 1] : 0.0;
            const double div =
                (fx_hi - fx_lo) / dx + (fp_hi - fp_lo) / dp;
            const double v = P[idx(g, i, j)] - dt * div;
            out.density[idx(g, i, j)] = v;
            min_val = std::min(min_val, v);
        }
    }
    out.worst_undershoot = std::min(state.worst_undershoot, min_val);
    return out;
}

FPEState fpe_step(const FPEState& state, const PhysParams& params,
                  double dt) {
    return fpe_step(state, fpe_coefficients(params), dt);
}

PhaseMoments fpe_moments(const FPEState& state) {
    const PhaseGrid& g = state.grid;
    const double cell = g.dx() * g.dp();
    double m = 0.0, sx = 0.0, sp = 0.0;
    for (std::size_t i = 0; i < g.n_x; ++i) {
        const double x = g.x_center(i);
        for (std::size_t j = 0; j < g.n_p; ++j) {
            const double w = state.density[idx(g, i, j)] * cell;
            m += w;
            sx += w * x;
            sp += w * g.p_center(j);
        }
    }
    PhaseMoments out;
    out.mean_x = sx / m;
    out.mean_p = sp / m;
    double vxx = 0.0, vpp = 0.0, vxp = 0.0;
    for (std::size_t i = 0; i < g.n_x; ++i) {
        const double ex = g.x_center(i) - out.mean_x;
        for (std::size_t j = 0; j < g.n_p; ++j) {
            const double ep = g.p_center(j) - out.mean_p;
            const double w = state.density[idx(g, i, j)] * cell;
            vxx += w * ex * ex;
            vpp += w * ep * ep;
            vxp += w * ex * ep;
        }
    }
    out.var_x = vxx / m;
    out.var_p = vpp / m;
    out.cov_xp = vxp / m;
    return out;
}

double boundary_density_ratio(const FPEState& state) {
    const PhaseGrid& g = state.grid;
    double peak = 0.0;
    for (double v : state.density) peak = std::max(peak, v);
    if (peak <= 0.0) return std::numeric_limits<double>::infinity();
    double edge = 0.0;
    for (std::size_t j = 0; j < g.n_p; ++j) {
        edge = std::max(edge, std::abs(state.density[idx(g, 0, j)]));
        edge = std::max(edge, std::abs(state.density[idx(g, g.n_x - 1, j)]));
    }
    for (std::size_t i = 0; i < g.n_x; ++i) {
        edge = std::max(edge, std::abs(state.density[idx(g, i, 0)]));
        edge = std::max(edge, std::abs(state.density[idx(g, i, g.n_p - 1)]));
    }
    return edge / peak;
}

double min_density(const FPEState& state) {
    double m = std::numeric_limits<double>::infinity();
    for (double v : state.density) m = std::min(m, v);
    return m;
}

FPEState coarsen(const FPEState& state, std::size_t factor) {
    const PhaseGrid& g = state.grid;
    if (factor < 1 || g.n_x % factor != 0 || g.n_p % factor != 0)
        throw InvalidParameterError(
            "coarsen factor must divide both grid dimensions");
    FPEState out;
    out.grid = g;
    out.grid.n_x = g.n_x / factor;
    out.grid.n_p = g.n_p / factor;
    out.t = state.t;
    out.density.assign(out.grid.n_x * out.grid.n_p, 0.0);
    const double inv = 1.0 / (static_cast<double>(factor) *
                              static_cast<double>(factor));
    for (std::size_t i = 0; i < g.n_x; ++i)
        for (std::size_t j = 0; j < g.n_p; ++j)
            out.density[(i / factor) * out.grid.n_p + j / factor] +=
                state.density[idx(g, i, j)] * inv;
    return out;
}

double l1_distance(const FPEState& a, const FPEState& b) {
    if (!(a.grid == b.grid))
        throw DomainError("l1_distance: phase grids differ");
    double acc = 0.0;
    for (std::size_t k = 0; k < a.density.size(); ++k)
        acc += std::abs(a.density[k] - b.density[k]);
    return acc * a.grid.dx() * a.grid.dp();
}

HistogramComparison compare_histogram(std::span<const PhasePoint> sample,
                                      const FPEState& state) {
    const PhaseGrid& g = state.grid;
    if (sample.empty())
        throw InvalidParameterError("compare_histogram: empty sample");
    const double dx = g.dx();
    const double dp = g.dp();
    std::vector<double> hist(g.n_x * g.n_p, 0.0);
    std::size_t outside = 0;
    for (const PhasePoint& pt : sample) {
        const double fi = (pt.x - g.x_min) / dx;
        const double fj = (pt.p - g.p_min) / dp;
        if (fi < 0.0 || fj < 0.0 || fi >= static_cast<double>(g.n_x) ||
            fj >= static_cast<double>(g.n_p)) {
            ++outside;
            continue;
        }
        hist[static_cast<std::size_t>(fi) * g.n_p +
             static_cast<std::size_t>(fj)] += 1.0;
    }
    const double norm =
        1.0 / (static_cast<double>(sample.size()) * dx * dp);
    for (double& v : hist) v *= norm;

    HistogramComparison out;
    out.n_outside = outside;
    for (std::size_t k = 0; k < hist.size(); ++k)
        out.l1_distance += std::abs(hist[k] - state.density[k]);
    out.l1_distance *= dx * dp;

    // Marginals.
    std::vector<double> hx(g.n_x, 0.0), dxm(g.n_x, 0.0);
    std::vector<double> hp(g.n_p, 0.0), dpm(g.n_p, 0.0);
    for (std::size_t i = 0; i < g.n_x; ++i)
        for (std::size_t j = 0; j < g.n_p; ++j) {
            hx[i] += hist[idx(g, i, j)] * dp;
            dxm[i] += state.density[idx(g, i, j)] * dp;
            hp[j] += hist[idx(g, i, j)] * dx;
            dpm[j] += state.density[idx(g, i, j)] * dx;
        }
    for (std::size_t i = 0; i < g.n_x; ++i)
        out.l1_marginal_x += std::abs(hx[i] - dxm[i]) * dx;
    for (std::size_t j = 0; j < g.n_p; ++j)
        out.l1_marginal_p += std::abs(hp[j] - dpm[j]) * dp;
    return out;
}

std::vector<PhasePoint> sample_from_density(const FPEState& state,
                                            std::size_t n,
                                            const SeedPolicy& seed) {
    const PhaseGrid& g = state.grid;
    std::vector<double> cdf(state.density.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < state.density.size(); ++k) {
        acc += std::max(0.0, state.density[k]);
        cdf[k] = acc;
    }
    if (!(acc > 0.0))
        throw InvalidParameterError("sample_from_density: empty density");
    RandomStream stream(seed, NoiseRole::Resample);
    std::vector<PhasePoint> out(n);
    for (std::size_t s = 0; s < n; ++s) {
        const double u = stream.uniform() * acc;
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        const std::size_t k =
            static_cast<std::size_t>(std::distance(cdf.begin(), it));
        const std::size_t i = k / g.n_p;
        const std::size_t j = k % g.n_p;
        out[s].x = g.x_min + (static_cast<double>(i) + stream.uniform()) *
                                 g.dx();
        out[s].p = g.p_min + (static_cast<double>(j) + stream.uniform()) *
                                 g.dp();
    }
    return out;
}

} // namespace csl

#include "csl/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "csl/errors.hpp"

namespace csl {

std::vector<double> EnsembleMoments::times() const {
    std::vector<double> out(rows.size());
    std::transform(rows.begin(), rows.end(), out.begin(),
                   [](const MomentRow& r) { return r.t; });
    return out;
}

void validate(const EnsembleMoments& moments) {
    for (std::size_t i = 0; i < moments.rows.size(); ++i) {
        const MomentRow& r = moments.rows[i];
        if (i > 0 && !(r.t > moments.rows[i - 1].t))
            throw Error("moment times not strictly increasing at row " +
                        std::to_string(i));
        if (r.var_x < 0.0 || r.var_p < 0.0)
            throw Error("negative variance at t = " + std::to_string(r.t));
        // Tiny roundoff slack on the Cauchy-Schwarz bound.
        const double bound = std::sqrt(r.var_x * r.var_p);
        if (std::abs(r.cov_xp) > bound * (1.0 + 1e-12) + 1e-300)
            throw Error("covariance violates Cauchy-Schwarz at t = " +
                        std::to_string(r.t));
    }
}

std::vector<ExcessRow> excess_moments(const EnsembleMoments& full,
                                      const EnsembleMoments& baseline) {
    if (full.rows.size() != baseline.rows.size())
        throw DomainError("excess_moments: time grids differ in length");
    std::vector<ExcessRow> out(full.rows.size());
    for (std::size_t i = 0; i < full.rows.size(); ++i) {
        const MomentRow& f = full.rows[i];
        const MomentRow& b = baseline.rows[i];
        if (f.t != b.t)
            throw DomainError("excess_moments: time grids differ at row " +
                              std::to_string(i));
        out[i] = ExcessRow{
            .t = f.t,
            .excess_var_x = f.var_x - b.var_x,
            .excess_var_p = f.var_p - b.var_p,
            .se_x = std::hypot(f.se_var_x, b.se_var_x),
            .se_p = std::hypot(f.se_var_p, b.se_var_p),
        };
    }
    return out;
}

FitWindow default_fit_window(std::span<const double> times) {
    double t_min = std::numeric_limits<double>::infinity();
    double t_max = 0.0;
    for (double t : times) {
        if (t <= 0.0) continue;
        t_min = std::min(t_min, t);
        t_max = std::max(t_max, t);
    }
    if (!(t_max > 0.0) || !std::isfinite(t_min))
        throw InsufficientDataError(
            "default_fit_window: no positive times in series");
    return FitWindow{std::sqrt(t_min * t_max), t_max};
}

FitResult fit_power_law(std::span<const double> t, std::span<const double> y,
                        std::span<const double> se, const FitWindow& window) {
    if (t.size() != y.size() || (!se.empty() && se.size() != y.size()))
        throw InvalidParameterError("fit_power_law: array length mismatch");
    if (!(window.t_hi > window.t_lo))
        throw InvalidParameterError("fit_power_law: empty window");

    std::vector<double> lx, ly, w;
    bool weighted = !se.empty();
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < window.t_lo || t[i] > window.t_hi || t[i] <= 0.0) continue;
        if (!(y[i] > 0.0))
            throw FitDomainError("fit_power_law: non-positive value y = " +
                                 std::to_string(y[i]) + " at t = " +
                                 std::to_string(t[i]));
        lx.push_back(std::log(t[i]));
        ly.push_back(std::log(y[i]));
        if (weighted) {
            if (!(se[i] > 0.0)) weighted = false;
            w.push_back(se[i] > 0.0 ? (y[i] / se[i]) * (y[i] / se[i]) : 1.0);
        }
    }
    const std::size_t n = lx.size();
    if (n < 5)
        throw InsufficientDataError("fit_power_law: " + std::to_string(n) +
                                    " points in window, need at least 5");
    if (!weighted) w.assign(n, 1.0);

    double sw = 0.0, swx = 0.0, swy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sw += w[i];
        swx += w[i] * lx[i];
        swy += w[i] * ly[i];
    }
    const double xbar = swx / sw;
    const double ybar = swy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = lx[i] - xbar;
        sxx += w[i] * dx * dx;
        sxy += w[i] * dx * (ly[i] - ybar);
    }
    if (!(sxx > 0.0))
        throw InsufficientDataError("fit_power_law: degenerate time window");

    const double slope = sxy / sxx;
    const double intercept = ybar - slope * xbar;

    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - (intercept + slope * lx[i]);
        ss_res += w[i] * r * r;
        const double d = ly[i] - ybar;
        ss_tot += w[i] * d * d;
    }

    // With genuine 1/sigma^2 weights the parameter covariance is
    // (X^T W X)^-1 as is; for the unweighted fit it is scaled by the
    // residual variance.
    double var_scale;
    if (weighted) {
        var_scale = 1.0;
    } else {
        var_scale = n > 2 ? ss_res / static_cast<double>(n - 2) : 0.0;
    }
    const double slope_var = var_scale / sxx;
    const double intercept_var = var_scale * (1.0 / sw + xbar * xbar / sxx);

    FitResult out;
    out.exponent = slope;
    out.amplitude = std::exp(intercept);
    out.exponent_se = std::sqrt(std::max(slope_var, 0.0));
    out.amplitude_se = out.amplitude * std::sqrt(std::max(intercept_var, 0.0));
    out.r_squared = ss_tot > 0.0 ? std::max(0.0, 1.0 - ss_res / ss_tot) : 1.0;
    out.window = window;
    return out;
}

double intermittency_exponent(double euclidean_dim, double fractal_dim) {
    const double mu = euclidean_dim - fractal_dim;
    if (!std::isfinite(mu) || mu < 0.0)
        throw InvalidParameterError(
            "intermittency_exponent: codimension mu = E - df must be >= 0, "
            "got " +
            std::to_string(mu));
    if (mu >= 4.0)
        throw DomainError(
            "intermittency_exponent: map singular at mu >= 4, got mu = " +
            std::to_string(mu));
    return 1.0 + 3.0 * mu / (4.0 - mu);
}

PredictedExponents predicted_exponents(double A) {
    if (!(A > 0.0))
        throw InvalidParameterError("predicted_exponents requires A > 0");
    return PredictedExponents{A + 2.0, A};
}

} // namespace csl

#include "csl/kernel_field.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "csl/errors.hpp"

namespace csl {

void validate(const SpatialGrid& grid) {
    if (!(grid.q_max > grid.q_min))
        throw InvalidParameterError("spatial grid needs q_max > q_min");
    if (grid.n_cells < 1)
        throw InvalidParameterError("spatial grid needs at least one cell");
    if (!std::isfinite(grid.q_min) || !std::isfinite(grid.q_max))
        throw InvalidParameterError("spatial grid extents must be finite");
}

void validate_grid_for_kernel(const SpatialGrid& grid, double alpha) {
    validate(grid);
    if (!(alpha > 0.0))
        throw InvalidParameterError("kernel requires alpha > 0");
    const double width = 1.0 / std::sqrt(alpha);
    if (grid.q_max - grid.q_min < 8.0 * width)
        throw InvalidParameterError(
            "spatial grid spans fewer than 8 kernel widths");
    if (grid.dq() > 0.2 * width)
        throw InvalidParameterError(
            "spatial grid dq exceeds 0.2 kernel widths");
}

double gaussian_kernel(double alpha, double x) {
    if (!(alpha > 0.0))
        throw InvalidParameterError("gaussian_kernel requires alpha > 0");
    return std::sqrt(alpha / (2.0 * std::numbers::pi)) *
           std::exp(-0.5 * alpha * x * x);
}

double kernel_gradient(double alpha, double x) {
    return -alpha * x * gaussian_kernel(alpha, x);
}

double kernel_gradient_sq_integral(double alpha) {
    if (!(alpha > 0.0))
        throw InvalidParameterError(
            "kernel_gradient_sq_integral requires alpha > 0");
    return std::pow(alpha, 1.5) / (4.0 * std::sqrt(std::numbers::pi));
}

double kernel_window_halfwidth(double alpha) {
    return 6.0 / std::sqrt(alpha);
}

CellWindow kernel_window(const SpatialGrid& grid, double alpha, double x) {
    const double half = kernel_window_halfwidth(alpha);
    const double lo = x - half;
    const double hi = x + half;
    if (lo < grid.q_min || hi > grid.q_max)
        throw DomainError("kernel window [" + std::to_string(lo) + ", " +
                          std::to_string(hi) +
                          "] not covered by the spatial grid [" +
                          std::to_string(grid.q_min) + ", " +
                          std::to_string(grid.q_max) + "]");
    const double dq = grid.dq();
    // Cells whose centers fall inside the window.
    double f = std::ceil((lo - grid.q_min) / dq - 0.5);
    double l = std::floor((hi - grid.q_min) / dq - 0.5);
    if (f < 0.0) f = 0.0;
    const auto last_cell = static_cast<double>(grid.n_cells - 1);
    if (l > last_cell) l = last_cell;
    return CellWindow{static_cast<std::size_t>(f),
                      static_cast<std::size_t>(l)};
}

double convolve_gradient(std::span<const double> field,
                         const SpatialGrid& grid, double alpha, double x) {
    if (field.size() != grid.n_cells)
        throw InvalidParameterError(
            "field increment array does not match the grid");
    const CellWindow w = kernel_window(grid, alpha, x);
    double acc = 0.0;
    for (std::size_t i = w.first; i <= w.last; ++i)
        acc += field[i] * kernel_gradient(alpha, x - grid.center(i));
    return acc;
}

double convolve_gradient_window(std::span<const double> window_field,
                                const CellWindow& window,
                                const SpatialGrid& grid, double alpha,
                                double x) {
    if (window_field.size() != window.last - window.first + 1)
        throw InvalidParameterError("window field size mismatch");
    double acc = 0.0;
    for (std::size_t k = 0; k < window_field.size(); ++k) {
        const double q = grid.center(window.first + k);
        acc += window_field[k] * kernel_gradient(alpha, x - q);
    }
    return acc;
}

} // namespace csl

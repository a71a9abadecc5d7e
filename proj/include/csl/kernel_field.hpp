#ifndef CSL_KERNEL_FIELD_HPP
#define CSL_KERNEL_FIELD_HPP

#include <cstddef>
#include <span>

namespace csl {

// Uniform cell-centered spatial grid for the noise field. Cell i spans
// [q_min + i*dq, q_min + (i+1)*dq] with center q_min + (i+1/2)*dq.
struct SpatialGrid {
    double q_min = -20.0;
    double q_max = 20.0;
    std::size_t n_cells = 1960;

    double dq() const { return (q_max - q_min) / static_cast<double>(n_cells); }
    double center(std::size_t i) const {
        return q_min + (static_cast<double>(i) + 0.5) * dq();
    }

    bool operator==(const SpatialGrid&) const = default;
};

// Basic shape checks: q_max > q_min, n_cells >= 1.
void validate(const SpatialGrid& grid);

// Kernel-resolution checks for use with the localization kernel of width
// 1/sqrt(alpha): the domain must span at least 8 kernel widths (truncated
// mass < 1e-6) and dq must be at most 0.2 kernel widths (>= 5 cells per
// width). Throws InvalidParameterError.
void validate_grid_for_kernel(const SpatialGrid& grid, double alpha);

// Gaussian localization kernel, G(x) = sqrt(alpha/2pi) exp(-alpha x^2 / 2).
double gaussian_kernel(double alpha, double x);

// dG/dx = -alpha x G(x).
double kernel_gradient(double alpha, double x);

// Closed form of the squared-gradient integral int (dG/dx)^2 dq
// = alpha^(3/2) / (4 sqrt(pi)). The variance of convolve_gradient over the
// field ensemble is dt times this.
double kernel_gradient_sq_integral(double alpha);

// Half-width of the convolution window around x, 6 kernel widths.
double kernel_window_halfwidth(double alpha);

// Cell index range [first, last] of the window [x - 6/sqrt(alpha),
// x + 6/sqrt(alpha)]. Throws DomainError if the grid does not cover it.
struct CellWindow {
    std::size_t first;
    std::size_t last; // inclusive
};
CellWindow kernel_window(const SpatialGrid& grid, double alpha, double x);

// Weighted sum of field increments against the kernel gradient:
// sum_i dB_i * dG/dx(x - q_i), over the window cells only. `field` must
// cover the whole grid.
double convolve_gradient(std::span<const double> field,
                         const SpatialGrid& grid, double alpha, double x);

// Same sum when only the window cells were materialized: `window_field[k]`
// is the increment of cell window.first + k.
double convolve_gradient_window(std::span<const double> window_field,
                                const CellWindow& window,
                                const SpatialGrid& grid, double alpha,
                                double x);

} // namespace csl

#endif

#ifndef CSL_NOISE_HPP
#define CSL_NOISE_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "csl/rng.hpp"

namespace csl {

struct SpatialGrid; // kernel_field.hpp

enum class NoiseKind { White, Affine };

// Selects the temporal statistics of a noise role. For Affine noise the
// integrated process B(t) satisfies Var(B(t)) = t^A; it is realized as
// fractional Gaussian noise with Hurst exponent H = A/2, the stationary-
// increment completion of that variance law. A = 1 is white noise.
struct NoiseSpec {
    NoiseKind kind = NoiseKind::White;
    double exponent = 1.0; // A, used only when kind == Affine

    bool operator==(const NoiseSpec&) const = default;
};

// Throws InvalidParameterError unless kind == White or 0 < A <= 2.
void validate(const NoiseSpec& spec);

struct TimeGrid {
    std::size_t n_steps = 1;
    double dt = 1e-3;

    bool operator==(const TimeGrid&) const = default;
};

// n_steps i.i.d. zero-mean Gaussian increments of variance dt.
std::vector<double> white_increments(std::size_t n_steps, double dt,
                                     const SeedPolicy& seed,
                                     NoiseRole role = NoiseRole::Dw);

// Autocovariance gamma(0..n-1) of the affine increments on a uniform grid
// of spacing dt: gamma(k) = dt^A/2 * (|k+1|^A - 2|k|^A + |k-1|^A).
std::vector<double> fgn_autocovariance(double A, double dt, std::size_t n);

// Covariance of the integrated affine process at two times:
// Cov(B(s), B(t)) = (s^A + t^A - |t-s|^A) / 2.
double fbm_covariance(double A, double s, double t);

// Synthesizer for correlated (affine) increments. Construction does the
// O(n^2)..O(n^3) covariance work once; sample() is then a pure function of
// the seed and can be called concurrently from any number of threads.
//
// Two synthesis routes: exact dense-covariance Cholesky (ground truth,
// n <= 4096) and the Hosking recursion (O(n^2) per sample, any n). Auto
// picks Cholesky when the factor fits the n <= 4096 budget.
class FgnSynthesizer {
public:
    enum class Method { Auto, Cholesky, Hosking };

    FgnSynthesizer(double A, std::size_t n_steps, double dt,
                   Method method = Method::Auto);

    std::vector<double> sample(const SeedPolicy& seed,
                               NoiseRole role = NoiseRole::DB) const;

    Method method() const { return method_; }
    std::size_t n_steps() const { return n_; }

private:
    void build_cholesky();
    std::vector<double> sample_cholesky(RandomStream& stream) const;
    std::vector<double> sample_hosking(RandomStream& stream) const;

    double A_;
    std::size_t n_;
    double dt_;
    Method method_;
    std::vector<double> gamma_;    // autocovariance, both methods
    std::vector<double> chol_;     // packed lower-triangular factor
};

// Convenience wrapper: one synthesized sequence. Prefer holding an
// FgnSynthesizer when drawing many realizations of the same shape.
std::vector<double> affine_increments(double A, const TimeGrid& grid,
                                      const SeedPolicy& seed,
                                      NoiseRole role = NoiseRole::DB);

// Discretized space-time white noise: one independent zero-mean Gaussian
// per grid cell with variance dt*dq, so weighted cell sums converge to the
// field integral as dq -> 0. Cell values are addressed by
// (seed, role, step_index, cell_index), so any sub-range of cells can be
// materialized without generating the rest.
class FieldSampler {
public:
    FieldSampler(const SeedPolicy& seed, NoiseRole role = NoiseRole::DB);

    // Fills out[0..count) with cells [first_cell, first_cell+count) of the
    // field increment at time step `step_index`, scaled to variance dt*dq.
    void fill_cells(std::size_t step_index, std::size_t first_cell,
                    std::span<double> out, double dt, double dq) const;

private:
    SeedPolicy seed_;
    NoiseRole role_;
};

// Full-grid field increment for one time step.
std::vector<double> field_increments(const SpatialGrid& grid, double dt,
                                     const SeedPolicy& seed,
                                     std::size_t step_index = 0,
                                     NoiseRole role = NoiseRole::DB);

} // namespace csl

#endif

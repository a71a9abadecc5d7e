#include "csl/noise.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "csl/errors.hpp"
#include "csl/kernel_field.hpp"

namespace csl {

namespace {

constexpr std::size_t kCholeskyMaxSteps = 4096;

// Relative jitter added to the diagonal if the plain factorization fails
// (the A = 2 covariance is rank one, for example).
constexpr double kCholeskyJitter = 1e-12;

// Variance floor below which the Hosking innovation is treated as zero and
// the process continues deterministically (perfectly correlated limit).
constexpr double kInnovationFloor = 1e-14;

} // namespace

void validate(const NoiseSpec& spec) {
    if (spec.kind == NoiseKind::Affine) {
        if (!(spec.exponent > 0.0) || !(spec.exponent <= 2.0) ||
            !std::isfinite(spec.exponent))
            throw InvalidParameterError(
                "affine noise exponent must satisfy 0 < A <= 2, got " +
                std::to_string(spec.exponent));
    }
}

std::vector<double> white_increments(std::size_t n_steps, double dt,
                                     const SeedPolicy& seed, NoiseRole role) {
    if (n_steps < 1)
        throw InvalidParameterError("white_increments needs n_steps >= 1");
    if (!(dt > 0.0))
        throw InvalidParameterError("white_increments needs dt > 0");
    RandomStream stream(seed, role);
    const double scale = std::sqrt(dt);
    std::vector<double> out(n_steps);
    for (double& v : out) v = scale * stream.normal();
    return out;
}

std::vector<double> fgn_autocovariance(double A, double dt, std::size_t n) {
    validate(NoiseSpec{NoiseKind::Affine, A});
    if (!(dt > 0.0))
        throw InvalidParameterError("fgn_autocovariance needs dt > 0");
    const double scale = std::pow(dt, A);
    std::vector<double> gamma(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double kd = static_cast<double>(k);
        const double prev = k == 0 ? 1.0 : std::pow(kd - 1.0, A);
        gamma[k] = 0.5 * scale *
                   (std::pow(kd + 1.0, A) - 2.0 * std::pow(kd, A) + prev);
    }
    return gamma;
}

double fbm_covariance(double A, double s, double t) {
    return 0.5 * (std::pow(s, A) + std::pow(t, A) - std::pow(std::abs(t - s), A));
}

FgnSynthesizer::FgnSynthesizer(double A, std::size_t n_steps, double dt,
                               Method method)
    : A_(A), n_(n_steps), dt_(dt), method_(method) {
    if (n_steps < 1)
        throw InvalidParameterError("FgnSynthesizer needs n_steps >= 1");
    gamma_ = fgn_autocovariance(A, dt, n_steps);
    if (method_ == Method::Auto)
        method_ = n_ <= kCholeskyMaxSteps ? Method::Cholesky : Method::Hosking;
    if (method_ == Method::Cholesky) {
        if (n_ > kCholeskyMaxSteps)
            throw InvalidParameterError(
                "Cholesky synthesis is limited to 4096 steps");
        build_cholesky();
    }
}

// In-place Cholesky of the Toeplitz increment covariance, packed
// row-major lower triangle.
void FgnSynthesizer::build_cholesky() {
    for (int attempt = 0; attempt < 2; ++attempt) {
        const double jitter =
            attempt == 0 ? 0.0 : kCholeskyJitter * gamma_[0];
        chol_.assign(n_ * (n_ + 1) / 2, 0.0);
        bool ok = true;
        for (std::size_t r = 0; r < n_ && ok; ++r) {
            double* row_r = chol_.data() + r * (r + 1) / 2;
            for (std::size_t c = 0; c <= r; ++c) {
                const double* row_c = chol_.data() + c * (c + 1) / 2;
                double acc = gamma_[r - c] + (r == c ? jitter : 0.0);
                for (std::size_t k = 0; k < c; ++k)
                    acc -= row_r[k] * row_c[k];
                if (c == r) {
                    if (acc <= 0.0) {
                        ok = false;
                        break;
                    }
                    row_r[c] = std::sqrt(acc);
                } else {
                    row_r[c] = acc / row_c[c];
                }
            }
        }
        if (ok) return;
    }
    throw SynthesisError(
        "affine covariance not positive definite after regularization (A = " +
        std::to_string(A_) + ")");
}

std::vector<double> FgnSynthesizer::sample_cholesky(
    RandomStream& stream) const {
    std::vector<double> z(n_);
    for (double& v : z) v = stream.normal();
    std::vector<double> out(n_);
    for (std::size_t r = 0; r < n_; ++r) {
        const double* row = chol_.data() + r * (r + 1) / 2;
        double acc = 0.0;
        for (std::size_t c = 0; c <= r; ++c) acc += row[c] * z[c];
        out[r] = acc;
    }
    return out;
}

// Hosking's recursion: sample X_k from its exact conditional law given
// X_0..X_{k-1}, updating the partial-correlation coefficients by
// Durbin-Levinson. O(n^2) time, O(n) memory per realization.
std::vector<double> FgnSynthesizer::sample_hosking(
    RandomStream& stream) const {
    std::vector<double> out(n_);
    std::vector<double> phi(n_, 0.0);
    std::vector<double> phi_prev(n_, 0.0);
    double v = gamma_[0];
    out[0] = std::sqrt(v) * stream.normal();
    for (std::size_t k = 1; k < n_; ++k) {
        double mean = 0.0;
        if (v > kInnovationFloor * gamma_[0]) {
            double num = gamma_[k];
            for (std::size_t j = 1; j < k; ++j)
                num -= phi_prev[j] * gamma_[k - j];
            const double phi_k = num / v;
            phi[k] = phi_k;
            for (std::size_t j = 1; j < k; ++j)
                phi[j] = phi_prev[j] - phi_k * phi_prev[k - j];
            v *= (1.0 - phi_k * phi_k);
            if (v < 0.0) v = 0.0;
            std::copy(phi.begin() + 1, phi.begin() + static_cast<long>(k) + 1,
                      phi_prev.begin() + 1);
        }
        for (std::size_t j = 1; j <= k; ++j)
            mean += phi_prev[j] * out[k - j];
        out[k] = mean + (v > 0.0 ? std::sqrt(v) * stream.normal() : 0.0);
    }
    return out;
}

std::vector<double> FgnSynthesizer::sample(const SeedPolicy& seed,
                                           NoiseRole role) const {
    RandomStream stream(seed, role);
    return method_ == Method::Cholesky ? sample_cholesky(stream)
                                       : sample_hosking(stream);
}

std::vector<double> affine_increments(double A, const TimeGrid& grid,
                                      const SeedPolicy& seed,
                                      NoiseRole role) {
    FgnSynthesizer synth(A, grid.n_steps, grid.dt);
    return synth.sample(seed, role);
}

FieldSampler::FieldSampler(const SeedPolicy& seed, NoiseRole role)
    : seed_(seed), role_(role) {}

void FieldSampler::fill_cells(std::size_t step_index, std::size_t first_cell,
                              std::span<double> out, double dt,
                              double dq) const {
    if (!(dt > 0.0) || !(dq > 0.0))
        throw InvalidParameterError("field increments need dt > 0 and dq > 0");
    const double scale = std::sqrt(dt * dq);
    // Contexts are offset by one so step 0 never collides with the plain
    // sequential draws of the same stream.
    RandomStream stream(seed_, role_, step_index + 1);
    std::size_t i = 0;
    while (i < out.size()) {
        const std::size_t cell = first_cell + i;
        const auto pair = stream.normal_pair_at(cell >> 1);
        if ((cell & 1u) == 0 && i + 1 < out.size()) {
            out[i] = scale * pair[0];
            out[i + 1] = scale * pair[1];
            i += 2;
        } else {
            out[i] = scale * pair[cell & 1u];
            i += 1;
        }
    }
}

std::vector<double> field_increments(const SpatialGrid& grid, double dt,
                                     const SeedPolicy& seed,
                                     std::size_t step_index, NoiseRole role) {
    validate(grid);
    if (!(dt > 0.0))
        throw InvalidParameterError("field_increments needs dt > 0");
    std::vector<double> out(grid.n_cells);
    FieldSampler sampler(seed, role);
    sampler.fill_cells(step_index, 0, out, dt, grid.dq());
    return out;
}

} // namespace csl

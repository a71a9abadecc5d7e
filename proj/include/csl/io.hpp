#ifndef CSL_IO_HPP
#define CSL_IO_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "csl/estimators.hpp"
#include "csl/fokker_planck.hpp"

namespace csl {

// Writes `contents` to `path` atomically: a sibling temp file plus rename,
// so no reader ever sees a partial file. Throws IoError.
void atomic_write(const std::filesystem::path& path,
                  const std::string& contents);

std::string read_file(const std::filesystem::path& path);

// Round-trippable formatting (shortest representation of the exact double).
std::string format_double(double v);

// Moments CSV, schema csl.moments.v1:
//   t,mean_x,var_x,mean_p,var_p,cov_xp,se_var_x,se_var_p,n_alive
std::string moments_to_csv(const EnsembleMoments& moments);
EnsembleMoments moments_from_csv(const std::string& text);

void write_moments_csv(const std::filesystem::path& path,
                       const EnsembleMoments& moments);
EnsembleMoments read_moments_csv(const std::filesystem::path& path);

// FPE moment series CSV, schema csl.fpe_moments.v1:
//   t,mean_x,var_x,var_p,cov_xp,mass
struct FpeMomentRow {
    double t;
    double mean_x;
    double var_x;
    double var_p;
    double cov_xp;
    double mass;
};
std::string fpe_moments_to_csv(const std::vector<FpeMomentRow>& rows);

// Density snapshot as a plain-text matrix: one header line
// (t, grid dims, extents), then n_x rows of n_p values.
std::string density_to_text(const FPEState& state);

} // namespace csl

#endif

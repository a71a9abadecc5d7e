#ifndef CSL_RNG_HPP
#define CSL_RNG_HPP

#include <array>
#include <cstdint>

namespace csl {

// Identifies one reproducible noise stream. Streams with distinct
// (master_seed, stream_index, role) triples are statistically independent,
// and the sequence drawn from a stream is a pure function of the triple:
// re-running with the same inputs gives bit-identical output, no matter how
// many other streams are consumed concurrently.
struct SeedPolicy {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_index = 0;

    bool operator==(const SeedPolicy&) const = default;
};

// Which noise a stream feeds. Dw is the shared white noise of the position
// and momentum equations, DB the localization field (or its reduced scalar
// form), Init the initial-condition draws, Resample the histogram
// calibration draws.
enum class NoiseRole : std::uint64_t { Dw = 1, DB = 2, Init = 3, Resample = 4 };

// Philox4x32-10 counter-based generator (Salmon et al., Random123 family).
// A pure bijective function from a 128-bit counter and 64-bit key to 128
// output bits; any word of the output sequence can be computed directly,
// which is what makes per-(trajectory, step, cell) noise addressable.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;

    explicit Philox4x32(std::uint64_t key)
        : key0_(static_cast<std::uint32_t>(key)),
          key1_(static_cast<std::uint32_t>(key >> 32)) {}

    Counter operator()(Counter ctr) const;

private:
    std::uint32_t key0_;
    std::uint32_t key1_;
};

// Derives the 64-bit Philox key for a (seed, role) pair.
std::uint64_t derive_stream_key(const SeedPolicy& seed, NoiseRole role);

// Sequential draws from one keyed stream. `context` partitions the counter
// space so that independent sub-streams (e.g. one per time step for the
// noise field) never collide with the plain sequential draws (context 0).
class RandomStream {
public:
    RandomStream(const SeedPolicy& seed, NoiseRole role,
                 std::uint64_t context = 0);

    std::uint64_t next_u64();

    // Uniform on (0,1), never exactly 0 or 1.
    double uniform();

    // Standard normal via Box-Muller; one Philox block yields two normals.
    double normal();

    // The two normals of block `block` within this stream's context. Used
    // for addressable per-cell field draws; does not disturb the sequential
    // state.
    std::array<double, 2> normal_pair_at(std::uint64_t block) const;

private:
    std::array<std::uint64_t, 2> block_u64(std::uint64_t block) const;

    Philox4x32 engine_;
    std::uint64_t context_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int buffered_u64_ = 0;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

} // namespace csl

#endif

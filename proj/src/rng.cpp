#include "csl/rng.hpp"

#include <cmath>
#include <numbers>

namespace csl {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo32(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                      std::uint32_t& lo) {
    const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(prod >> 32);
    lo = static_cast<std::uint32_t>(prod);
}

// Fibonacci-hash based mixer (the splitmix64 finalizer).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline double u64_to_unit_open(std::uint64_t x) {
    // 53 significant bits, shifted into (0,1).
    return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

} // namespace

Philox4x32::Counter Philox4x32::operator()(Counter ctr) const {
    std::uint32_t k0 = key0_;
    std::uint32_t k1 = key1_;
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo32(kPhiloxM0, ctr[0], hi0, lo0);
        mulhilo32(kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
        k0 += kPhiloxW0;
        k1 += kPhiloxW1;
    }
    return ctr;
}

std::uint64_t derive_stream_key(const SeedPolicy& seed, NoiseRole role) {
    std::uint64_t h = splitmix64(seed.master_seed);
    h = splitmix64(h ^ seed.stream_index);
    h = splitmix64(h ^ static_cast<std::uint64_t>(role));
    return h;
}

RandomStream::RandomStream(const SeedPolicy& seed, NoiseRole role,
                           std::uint64_t context)
    : engine_(derive_stream_key(seed, role)), context_(context) {}

std::array<std::uint64_t, 2> RandomStream::block_u64(
    std::uint64_t block) const {
    const Philox4x32::Counter ctr = {
        static_cast<std::uint32_t>(block),
        static_cast<std::uint32_t>(block >> 32),
        static_cast<std::uint32_t>(context_),
        static_cast<std::uint32_t>(context_ >> 32)};
    const Philox4x32::Counter out = engine_(ctr);
    return {static_cast<std::uint64_t>(out[0]) |
                (static_cast<std::uint64_t>(out[1]) << 32),
            static_cast<std::uint64_t>(out[2]) |
                (static_cast<std::uint64_t>(out[3]) << 32)};
}

std::uint64_t RandomStream::next_u64() {
    if (buffered_u64_ == 0) {
        buffer_ = block_u64(block_++);
        buffered_u64_ = 2;
    }
    return buffer_[2 - buffered_u64_--];
}

double RandomStream::uniform() { return u64_to_unit_open(next_u64()); }

double RandomStream::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    cached_normal_ = r * std::sin(theta);
    has_cached_normal_ = true;
    return r * std::cos(theta);
}

std::array<double, 2> RandomStream::normal_pair_at(std::uint64_t block) const {
    const auto words = block_u64(block);
    const double u1 = u64_to_unit_open(words[0]);
    const double u2 = u64_to_unit_open(words[1]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
}

} // namespace csl

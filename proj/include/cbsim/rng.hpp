#pragma once

#include <cstdint>

namespace cbsim {

// 64-bit finalizer (splitmix64 style), used for all seeding and stream
// derivation in the simulator. No ambient entropy anywhere.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Counter-based deterministic stream: output i is a pure function of
// (seed, i), so replaying a run reproduces every draw bit for bit.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t next_u64() { return mix64(seed_ ^ mix64(counter_++)); }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform over {1, ..., 255}.
    std::uint8_t next_nonzero_byte() { return std::uint8_t(1 + next_u64() % 255); }

    // Uniform over {0, ..., bound-1}, bound >= 1.
    std::uint64_t next_below(std::uint64_t bound) { return next_u64() % bound; }

    std::uint64_t draws_consumed() const { return counter_; }

private:
    std::uint64_t seed_ = 0;
    std::uint64_t counter_ = 0;
};

// Independent stream/cell seeds: derive_seed(base, index, tag) = mix64(base ^ mix64(index ^ tag)).
// Used for sweep cells (index = cell number) and for the per-run substreams
// (schedule generation, join decisions, coding coefficients).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index, std::uint64_t tag = 0) {
    return mix64(base ^ mix64(index ^ tag));
}

namespace stream_tag {
inline constexpr std::uint64_t protocol = 0x70726f746f636f6cull;  // "protocol"
inline constexpr std::uint64_t schedule = 0x7363686564756c65ull;  // "schedule"
inline constexpr std::uint64_t coding = 0x636f64696e670000ull;    // "coding"
inline constexpr std::uint64_t payload = 0x7061796c6f616400ull;   // "payload"
}  // namespace stream_tag

}  // namespace cbsim

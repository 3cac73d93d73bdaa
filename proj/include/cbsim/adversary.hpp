#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cbsim/channel.hpp"

namespace cbsim {

struct ArrivalSchedule {
    // (slot, count) pairs, strictly increasing slots, counts > 0 only
    std::vector<std::pair<Slot, std::int64_t>> arrivals;
    Slot horizon = 0;  // arrivals occur at slots < horizon
    std::optional<Slot> window_w;
    std::optional<double> declared_rate;  // per-slot cap fraction used at generation

    std::int64_t total() const;
    std::int64_t at(Slot t) const;
};

enum class ArrivalPattern { Smooth, FrontloadedBursts, RandomSpread };

const char* to_string(ArrivalPattern p);

// Per-window arrival budget: floor((1 - 5/ln kappa) * w), clamped at zero.
// The formula goes negative for kappa < e^5 ~ 148, where no nonempty schedule
// can satisfy it; the clamp keeps the cap well defined there.
std::int64_t window_arrival_cap(Slot w, int kappa);
std::int64_t window_arrival_cap(Slot w, double rate_fraction);

// All n packets at slot 0. Rejects n < 1.
ArrivalSchedule batch_schedule(std::int64_t n);

// Every w consecutive slots carry at most the cap. Smooth and bursts inject
// the maximum the cap allows (smooth spreads it evenly, bursts drops it all
// at the start of each stretch of w slots); random-spread keeps a minimum
// spacing of ceil(w/cap) with seeded jitter, which stays under the cap but
// is not maximal. `rate` substitutes an explicit cap fraction for the
// kappa-derived one. Rejects w < 16*kappa^2.
ArrivalSchedule windowed_rate_schedule(Slot w, int kappa, Slot horizon, ArrivalPattern pattern,
                                       std::uint64_t seed,
                                       std::optional<double> rate = std::nullopt);

struct ScheduleViolation {
    Slot window_start = 0;
    std::int64_t window_sum = 0;
    std::int64_t cap = 0;
};

// First window [t, t+w) whose arrival sum exceeds the cap, or nullopt.
std::optional<ScheduleViolation> validate_schedule(const ArrivalSchedule& s, Slot w, int kappa);
std::optional<ScheduleViolation> validate_schedule(const ArrivalSchedule& s, Slot w,
                                                   std::int64_t cap);

// Max over all length-w windows of the arrival sum (0 for empty schedules).
std::int64_t max_window_sum(const ArrivalSchedule& s, Slot w);

// CSV lines "slot,count", '#' comments ignored. Counts must be >= 0; parse
// errors report the line number. Horizon is set to the last slot + 1.
ArrivalSchedule load_arrival_trace(const std::string& path);

}  // namespace cbsim

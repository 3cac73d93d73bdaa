#include "cbsim/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include "cbsim/rng.hpp"

namespace cbsim {

std::int64_t ArrivalSchedule::total() const {
    std::int64_t sum = 0;
    for (const auto& [slot, count] : arrivals) sum += count;
    return sum;
}

std::int64_t ArrivalSchedule::at(Slot t) const {
    auto it = std::lower_bound(arrivals.begin(), arrivals.end(), t,
                               [](const auto& e, Slot v) { return e.first < v; });
    return it != arrivals.end() && it->first == t ? it->second : 0;
}

const char* to_string(ArrivalPattern p) {
    switch (p) {
        case ArrivalPattern::Smooth: return "smooth";
        case ArrivalPattern::FrontloadedBursts: return "bursts";
        case ArrivalPattern::RandomSpread: return "spread";
    }
    return "?";
}

std::int64_t window_arrival_cap(Slot w, double rate_fraction) {
    if (w < 1) throw std::invalid_argument("window_arrival_cap: w must be >= 1");
    double capped = std::max(0.0, rate_fraction);
    return std::int64_t(std::floor(capped * double(w)));
}

std::int64_t window_arrival_cap(Slot w, int kappa) {
    if (kappa < 2) throw std::invalid_argument("window_arrival_cap: kappa must be >= 2");
    return window_arrival_cap(w, 1.0 - 5.0 / std::log(double(kappa)));
}

ArrivalSchedule batch_schedule(std::int64_t n) {
    if (n < 1) throw std::invalid_argument("batch_schedule: n must be >= 1");
    ArrivalSchedule s;
    s.arrivals.emplace_back(0, n);
    s.horizon = 1;
    return s;
}

ArrivalSchedule windowed_rate_schedule(Slot w, int kappa, Slot horizon, ArrivalPattern pattern,
                                       std::uint64_t seed, std::optional<double> rate) {
    if (w < 16 * Slot(kappa) * Slot(kappa))
        throw std::invalid_argument("windowed_rate_schedule: w must be >= 16*kappa^2");
    if (horizon < 0) throw std::invalid_argument("windowed_rate_schedule: horizon must be >= 0");

    const std::int64_t cap =
        rate ? window_arrival_cap(w, *rate) : window_arrival_cap(w, kappa);

    ArrivalSchedule s;
    s.horizon = horizon;
    s.window_w = w;
    s.declared_rate = double(cap) / double(w);
    if (cap == 0 || horizon == 0) return s;

    switch (pattern) {
        case ArrivalPattern::Smooth: {
            // Bresenham spread: every window of w slots sums to exactly cap.
            s.arrivals.reserve(std::size_t(std::min<std::int64_t>(horizon, cap * (horizon / w + 1))));
            for (Slot t = 0; t < horizon; ++t) {
                std::int64_t c = (t + 1) * cap / w - t * cap / w;
                if (c > 0) s.arrivals.emplace_back(t, c);
            }
            break;
        }
        case ArrivalPattern::FrontloadedBursts: {
            for (Slot t = 0; t < horizon; t += w) s.arrivals.emplace_back(t, cap);
            break;
        }
        case ArrivalPattern::RandomSpread: {
            CounterRng rng(seed);
            const Slot spacing = (w + cap - 1) / cap;  // >= w/cap keeps windows under cap
            const Slot jitter = std::max<Slot>(1, spacing / 8);
            Slot t = Slot(rng.next_below(std::uint64_t(spacing)));
            while (t < horizon) {
                s.arrivals.emplace_back(t, 1);
                t += spacing + Slot(rng.next_below(std::uint64_t(jitter)));
            }
            break;
        }
    }
    return s;
}

std::int64_t max_window_sum(const ArrivalSchedule& s, Slot w) {
    if (w < 1) throw std::invalid_argument("max_window_sum: w must be >= 1");
    if (s.arrivals.empty()) return 0;
    // Slide over starts 0..last; the sum changes only at event slots but the
    // scan is linear in the last arrival slot, which is fine at our scales.
    const auto& ev = s.arrivals;
    const Slot last = ev.back().first;
    std::int64_t best = 0, sum = 0;
    std::size_t lo = 0, hi = 0;
    for (Slot t = 0; t <= last; ++t) {
        while (hi < ev.size() && ev[hi].first < t + w) sum += ev[hi++].second;
        while (lo < hi && ev[lo].first < t) sum -= ev[lo++].second;
        best = std::max(best, sum);
    }
    return best;
}

std::optional<ScheduleViolation> validate_schedule(const ArrivalSchedule& s, Slot w,
                                                   std::int64_t cap) {
    if (w < 1) throw std::invalid_argument("validate_schedule: w must be >= 1");
    if (s.arrivals.empty()) return std::nullopt;
    const auto& ev = s.arrivals;
    const Slot last = ev.back().first;
    std::int64_t sum = 0;
    std::size_t lo = 0, hi = 0;
    for (Slot t = 0; t <= last; ++t) {
        while (hi < ev.size() && ev[hi].first < t + w) sum += ev[hi++].second;
        while (lo < hi && ev[lo].first < t) sum -= ev[lo++].second;
        if (sum > cap) return ScheduleViolation{t, sum, cap};
    }
    return std::nullopt;
}

std::optional<ScheduleViolation> validate_schedule(const ArrivalSchedule& s, Slot w, int kappa) {
    return validate_schedule(s, w, window_arrival_cap(w, kappa));
}

ArrivalSchedule load_arrival_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open arrival trace: " + path);
    ArrivalSchedule s;
    std::map<Slot, std::int64_t> acc;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected 'slot,count'");
        Slot slot;
        std::int64_t count;
        try {
            slot = std::stoll(line.substr(0, comma));
            count = std::stoll(line.substr(comma + 1));
        } catch (const std::exception&) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": not a number");
        }
        if (slot < 0)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": negative slot");
        if (count < 0)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": negative count");
        if (count > 0) acc[slot] += count;
        s.horizon = std::max(s.horizon, slot + 1);
    }
    s.arrivals.assign(acc.begin(), acc.end());
    return s;
}

}  // namespace cbsim

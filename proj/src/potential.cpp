#include "cbsim/potential.hpp"

#include <cmath>

namespace cbsim {

PotentialSnapshot snapshot_from(int kappa, std::int64_t n, std::int64_t m, double contention,
                                double p_min, Slot slot) {
    const double k = double(kappa);
    const double lnk = std::log(k);
    PotentialSnapshot s;
    s.slot = slot;
    s.c_t = contention;
    s.p_min = p_min;
    s.m_t = m;
    s.n_term = double(n);
    s.logc_term =
        contention > 0 ? std::max(0.0, 4.0 * k * std::log(contention / std::sqrt(k)) / lnk) : 0.0;
    s.s_term = 4.0 * std::log(1.0 / p_min) / lnk;
    s.u_term = 5.0 * double(m) / lnk;
    s.phi = s.n_term + s.logc_term + s.s_term + s.u_term;
    return s;
}

PotentialSnapshot snapshot(const ProtocolState& state, Slot slot) {
    return snapshot_from(state.kappa(), state.in_system(), state.inactive_count(),
                         state.contention(), state.p_min(), slot);
}

bool is_error_epoch(double contention_before, EpochKind kind, int kappa) {
    const double k = double(kappa);
    switch (kind) {
        case EpochKind::Silent: return contention_before >= std::pow(k, 0.25);
        case EpochKind::Overfull: return contention_before <= std::pow(k, 0.75);
        case EpochKind::Successful: return false;
    }
    return false;
}

EpochDeltaVerdict check_epoch_delta(const PotentialSnapshot& before,
                                    const PotentialSnapshot& after, EpochKind kind,
                                    bool is_error, const EpochContext& ctx) {
    const double k = double(ctx.kappa);
    const double arrival_unit = 1.0 + 5.0 / std::log(k);

    EpochDeltaVerdict v;
    v.epoch_kind = kind;
    v.is_error_epoch = is_error;
    v.context = ctx;
    v.delta_phi = after.phi - before.phi;

    const double arrival_gain = double(ctx.arrivals) * arrival_unit;
    if (kind == EpochKind::Successful) {
        v.bound = -double(ctx.length) + arrival_gain;
    } else if (is_error) {
        v.bound = k + arrival_gain + 2.0;
    } else {
        const bool tight = ctx.phi_before > 6.0 * k || ctx.p_min_before < 1.0 / std::sqrt(k) ||
                           ctx.c_before >= std::pow(k, 0.25);
        v.bound = -double(ctx.length) * (1.0 - 1.0 / k) + arrival_gain + (tight ? 0.0 : 2.0);
    }
    v.satisfied = v.delta_phi <= v.bound + 1e-9 * std::abs(v.bound) + 1e-12;
    return v;
}

}  // namespace cbsim

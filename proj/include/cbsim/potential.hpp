#pragma once

#include "cbsim/protocol.hpp"

namespace cbsim {

// The four-term progress measure
//   phi = N + max(0, 4k*log_k(c/sqrt(k))) + 4*log_k(1/p_min) + 5*M/ln(k)
// where N counts packets in the system, c is the contention (sum of active
// joining probabilities), p_min the smallest active probability (1 with no
// actives), and M the inactive count. Every term is nonnegative, so phi
// bounds the backlog N from above.
struct PotentialSnapshot {
    Slot slot = 0;
    double n_term = 0;
    double logc_term = 0;
    double s_term = 0;
    double u_term = 0;
    double phi = 0;
    double c_t = 0;
    double p_min = 1;
    std::int64_t m_t = 0;
};

PotentialSnapshot snapshot_from(int kappa, std::int64_t n, std::int64_t m, double contention,
                                double p_min, Slot slot);
PotentialSnapshot snapshot(const ProtocolState& state, Slot slot);

// An error epoch is a silent epoch at contention >= kappa^{1/4} or an
// overfull epoch at contention <= kappa^{3/4}; contention is constant across
// an epoch, so the value at its first slot decides.
bool is_error_epoch(double contention_before, EpochKind kind, int kappa);

struct EpochContext {
    int kappa = 6;
    int length = 1;
    std::int64_t arrivals = 0;
    double phi_before = 0;
    double c_before = 0;
    double p_min_before = 1;
};

struct EpochDeltaVerdict {
    EpochKind epoch_kind = EpochKind::Silent;
    bool is_error_epoch = false;
    double delta_phi = 0;
    double bound = 0;
    bool satisfied = true;
    EpochContext context;
};

// Per-epoch potential movement against the bound its case guarantees:
//   successful:            delta <= -l + i*(1 + 5/ln k)
//   error:                 delta <=  k + i*(1 + 5/ln k) + 2
//   other, if phi_before > 6k or p_min_before < 1/sqrt(k)
//          or c_before >= k^{1/4}:
//                          delta <= -l*(1 - 1/k) + i*(1 + 5/ln k)
//   other:                 delta <= -l*(1 - 1/k) + i*(1 + 5/ln k) + 2
// Inequalities are checked with 1e-9 relative plus 1e-12 absolute slack.
EpochDeltaVerdict check_epoch_delta(const PotentialSnapshot& before,
                                    const PotentialSnapshot& after, EpochKind kind,
                                    bool is_error, const EpochContext& ctx);

}  // namespace cbsim

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "cbsim/channel.hpp"
#include "cbsim/rng.hpp"

namespace cbsim {

enum class PacketStatus : std::uint8_t { Inactive, Active, Delivered };
enum class EpochKind : std::uint8_t { Silent, Successful, Overfull };

const char* to_string(EpochKind k);

// Active joining probabilities live on the ladder kappa^{(step-2)/4}, capped
// at 1: step 0 on activation (1/sqrt(kappa)), +1 after a silent epoch
// (saturating at 2, where the probability is 1), -1 after an overfull epoch.
double joining_probability(int kappa, int step);

// The update rule on a raw probability value; the ladder above is its orbit.
double updated_probability(double p, EpochKind kind, int kappa);

// Per-slot epoch termination check, given the count of packets that joined
// and the number of slots the epoch has run:
//   - silent at slot 1 when nobody joined;
//   - successful at slot |joiners| when 1 <= |joiners| <= kappa (the decoding
//     event fires then; this check precedes the kappa-elapsed one, so a full
//     group of exactly kappa joiners is successful, not overfull);
//   - overfull at slot kappa when more than kappa joined.
std::optional<EpochKind> end_epoch_classify(std::size_t joiner_count, int slots_elapsed,
                                            int kappa);

struct EpochOutcome {
    EpochKind kind = EpochKind::Silent;
    int length = 1;                    // slots, in [1, kappa]
    std::vector<PacketId> joiners;     // sorted
    std::int64_t arrivals_during = 0;  // filled by the driver
};

// Observer view of one packet.
struct Packet {
    PacketId id = 0;
    Slot arrival_slot = 0;
    PacketStatus status = PacketStatus::Inactive;
    double join_prob = 0;
    std::optional<Slot> delivery_slot;
};

// State captured between the epoch's probability boosts and the activations
// it triggers; used to account for the two effects separately.
struct ActivationBreakdown {
    std::int64_t activated = 0;
    double contention_before_activation = 0;
    double p_min_before_activation = 1;
};

// Packet bookkeeping for the backoff protocol. Single-threaded; a value that
// may be moved between runs but never shared. All randomness comes from the
// seed handed to the constructor, one draw per join decision in ascending
// packet-id order.
class ProtocolState {
public:
    ProtocolState(int kappa, std::uint64_t seed);

    // count new inactive packets with arrival time `slot`.
    void inject(std::int64_t count, Slot slot);

    // Starts an epoch: every active packet joins independently with its
    // probability; the joiner set stays frozen until the epoch ends.
    const std::vector<PacketId>& begin_epoch();

    // Counts one elapsed slot of the open epoch and reports whether it ends.
    std::optional<EpochKind> advance_epoch_slot();

    // Closes the epoch ending at `end_slot`: deliveries on success,
    // multiplicative probability moves otherwise, then activation of every
    // inactive packet that arrived strictly before a silent `end_slot`.
    EpochOutcome apply_updates(EpochKind kind, Slot end_slot,
                               ActivationBreakdown* breakdown = nullptr);

    bool epoch_in_progress() const { return epoch_in_progress_; }
    const std::vector<PacketId>& current_joiners() const { return joiners_; }

    int kappa() const { return kappa_; }
    double contention() const { return contention_; }
    double p_min() const { return p_min_; }  // 1 when no active packets
    std::int64_t active_count() const { return std::int64_t(active_.size()); }
    std::int64_t inactive_count() const { return std::int64_t(inactive_.size() - inactive_head_); }
    std::int64_t in_system() const { return active_count() + inactive_count(); }
    std::int64_t arrivals_total() const { return std::int64_t(arrival_.size()); }
    std::int64_t delivered_total() const { return delivered_; }
    Slot last_delivery_slot() const { return last_delivery_slot_; }

    Packet packet(PacketId id) const;
    // Latencies (delivery - arrival) of all delivered packets, in id order.
    std::vector<std::int64_t> delivered_latencies() const;

private:
    struct ActiveEntry {
        PacketId id;
        std::int16_t step;
    };

    double prob_of_step(int step) const;
    void refresh_aggregates();

    int kappa_;
    CounterRng rng_;
    std::vector<Slot> arrival_;            // by id
    std::vector<Slot> delivery_;           // by id, -1 while undelivered
    std::vector<PacketStatus> status_;     // by id
    std::vector<ActiveEntry> active_;      // ascending id
    std::vector<PacketId> inactive_;       // arrival (= id) order
    std::size_t inactive_head_ = 0;
    std::map<int, std::int64_t> step_counts_;
    mutable std::vector<double> prob_cache_;  // index 2 - step

    bool epoch_in_progress_ = false;
    int epoch_elapsed_ = 0;
    std::vector<PacketId> joiners_;
    std::vector<std::uint32_t> joiner_rows_;  // indices into active_

    double contention_ = 0;
    double p_min_ = 1;
    std::int64_t delivered_ = 0;
    Slot last_delivery_slot_ = -1;
};

}  // namespace cbsim

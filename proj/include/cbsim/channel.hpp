#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace cbsim {

using PacketId = std::uint32_t;
using Slot = std::int64_t;

enum class SlotClass : std::uint8_t { Silent, Good, Bad };

const char* to_string(SlotClass c);

// Silent = no transmitters, Good = between 1 and kappa, Bad = more than kappa.
// Rejects kappa < 1.
SlotClass classify_slot(std::size_t transmitter_count, int kappa);
SlotClass classify_slot(std::span<const PacketId> transmitters, int kappa);

struct SlotRecord {
    Slot slot_index = 0;
    std::vector<PacketId> transmitters;  // sorted, unique
    SlotClass cls = SlotClass::Silent;
};

// Sorts and dedups the transmitter set, then classifies it.
SlotRecord make_slot_record(Slot t, std::vector<PacketId> transmitters, int kappa);

struct DecodingEvent {
    int size = 0;                    // number of packets decoded
    Slot window_start = 0;           // always a good slot
    Slot window_end = 0;
    std::vector<PacketId> decoded;   // sorted, |decoded| == size
};

// Online decoding-event detector.
//
// Feed slots in strictly increasing slot order. An event fires at the
// earliest slot t where some window [s, t] (s a retained good slot after the
// previous event) has at least as many good slots as distinct packets
// transmitting in its good slots. When several windows qualify at the same
// t, the earliest start wins, so the event decodes as many packets as
// possible. On emission every retained good slot up to t is consumed; good
// slots before the window start are discarded for good.
//
// At most `lookback` good slots are retained (default 2*kappa). A good slot
// that falls off the back is lost: a packet heard only there will not be
// decoded unless it transmits again later.
class DecodingDetector {
public:
    explicit DecodingDetector(int kappa, std::size_t lookback = 0, bool capture_windows = false);

    std::optional<DecodingEvent> advance(Slot t, SlotClass cls, std::span<const PacketId> transmitters);
    std::optional<DecodingEvent> advance(const SlotRecord& slot);

    int kappa() const { return kappa_; }
    std::size_t lookback() const { return lookback_; }
    Slot last_event_end() const { return last_event_end_; }
    std::size_t pending_good_slots() const { return pending_.size(); }

    // Good slots of the most recent event's window; only populated when the
    // detector was built with capture_windows.
    const std::vector<SlotRecord>& last_event_window() const { return last_window_; }

private:
    struct Pending {
        SlotRecord slot;
        std::vector<PacketId> last_seen_here;  // ids whose latest good slot is this one
    };
    struct IdPos {
        std::uint64_t entry;  // global pending index
        std::uint32_t pos;    // position inside that entry's bucket
    };

    void drop_oldest();
    DecodingEvent emit(std::size_t start, Slot t);

    int kappa_;
    std::size_t lookback_;
    bool capture_windows_;
    Slot last_event_end_ = -1;
    Slot last_slot_ = -1;
    std::uint64_t base_ = 0;  // global index of pending_.front()
    std::deque<Pending> pending_;
    std::unordered_map<PacketId, IdPos> last_occurrence_;
    std::vector<SlotRecord> last_window_;
};

// Slot-trace replay input: one line per slot, "t,<id;id;...>" with an empty
// transmitter field for silent slots. Ids are free-form tokens; they are
// interned in first-appearance order and the names returned alongside.
struct SlotTrace {
    std::vector<SlotRecord> slots;
    std::vector<std::string> id_names;  // index = PacketId
};

SlotTrace load_slot_trace(const std::string& path, int kappa);

}  // namespace cbsim

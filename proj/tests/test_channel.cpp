#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <random>
#include <set>

#include "cbsim/channel.hpp"
#include "doctest.h"

using namespace cbsim;

namespace {

// Reference decoder: direct, quadratic restatement of the event rule. For
// every slot t it scans all candidate windows [s, t] over the retained good
// slots after the previous event (earliest start first) and fires when the
// window holds at least as many good slots as distinct transmitters.
struct RefDecoder {
    int kappa;
    std::size_t lookback;

    std::vector<DecodingEvent> replay(const std::vector<SlotRecord>& slots) const {
        std::vector<DecodingEvent> events;
        std::vector<const SlotRecord*> pending;
        for (const auto& rec : slots) {
            if (rec.cls != SlotClass::Good) continue;
            pending.push_back(&rec);
            if (pending.size() > lookback) pending.erase(pending.begin());
            bool fired = false;
            for (std::size_t k = 0; k < pending.size() && !fired; ++k) {
                std::set<PacketId> ids;
                for (std::size_t i = k; i < pending.size(); ++i)
                    ids.insert(pending[i]->transmitters.begin(), pending[i]->transmitters.end());
                if (pending.size() - k >= ids.size()) {
                    DecodingEvent ev;
                    ev.size = int(ids.size());
                    ev.window_start = pending[k]->slot_index;
                    ev.window_end = rec.slot_index;
                    ev.decoded.assign(ids.begin(), ids.end());
                    events.push_back(ev);
                    pending.clear();
                    fired = true;
                }
            }
        }
        return events;
    }
};

std::vector<DecodingEvent> run_detector(const std::vector<SlotRecord>& slots, int kappa,
                                        std::size_t lookback = 0) {
    DecodingDetector det(kappa, lookback);
    std::vector<DecodingEvent> events;
    for (const auto& rec : slots) {
        auto ev = det.advance(rec);
        if (ev) events.push_back(*ev);
    }
    return events;
}

bool same_events(const std::vector<DecodingEvent>& a, const std::vector<DecodingEvent>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].size != b[i].size || a[i].window_start != b[i].window_start ||
            a[i].window_end != b[i].window_end || a[i].decoded != b[i].decoded)
            return false;
    }
    return true;
}

std::vector<SlotRecord> random_trace(std::mt19937& gen, int kappa, int len, int id_pool) {
    std::vector<SlotRecord> slots;
    std::uniform_int_distribution<int> count_dist(0, kappa + 2);
    std::uniform_int_distribution<int> id_dist(0, id_pool - 1);
    for (int t = 0; t < len; ++t) {
        int count = count_dist(gen);
        std::vector<PacketId> ids;
        for (int i = 0; i < count; ++i) ids.push_back(PacketId(id_dist(gen)));
        slots.push_back(make_slot_record(t, std::move(ids), kappa));
    }
    return slots;
}

}  // namespace

TEST_CASE("slot classification") {
    CHECK(classify_slot(0, 4) == SlotClass::Silent);
    CHECK(classify_slot(std::vector<PacketId>{1, 2, 3}.size(), 3) == SlotClass::Good);
    CHECK(classify_slot(4, 3) == SlotClass::Bad);
    CHECK(classify_slot(1, 1) == SlotClass::Good);
    CHECK(classify_slot(2, 1) == SlotClass::Bad);
    CHECK_THROWS_AS(classify_slot(1, 0), std::invalid_argument);
    CHECK_THROWS_AS(classify_slot(1, -3), std::invalid_argument);
}

TEST_CASE("make_slot_record dedups and classifies") {
    SlotRecord rec = make_slot_record(7, {5, 3, 5, 3, 9}, 3);
    CHECK(rec.transmitters == std::vector<PacketId>{3, 5, 9});
    CHECK(rec.cls == SlotClass::Good);
}

TEST_CASE("three packets broadcasting together decode after three slots") {
    std::vector<SlotRecord> slots;
    for (int t = 1; t <= 3; ++t) slots.push_back(make_slot_record(t, {1, 2, 3}, 3));
    auto events = run_detector(slots, 3);
    REQUIRE(events.size() == 1);
    CHECK(events[0].size == 3);
    CHECK(events[0].window_start == 1);
    CHECK(events[0].window_end == 3);
    CHECK(events[0].decoded == std::vector<PacketId>{1, 2, 3});
}

TEST_CASE("staircase windows decode every packet") {
    std::vector<SlotRecord> slots;
    slots.push_back(make_slot_record(1, {1, 2, 3}, 3));
    slots.push_back(make_slot_record(2, {2, 3}, 3));
    slots.push_back(make_slot_record(3, {3}, 3));
    auto events = run_detector(slots, 3);
    REQUIRE(events.size() == 1);
    CHECK(events[0].size == 3);
    CHECK(events[0].window_start == 1);
    CHECK(events[0].window_end == 3);
    CHECK(events[0].decoded == std::vector<PacketId>{1, 2, 3});
}

TEST_CASE("an early event burns the slots before it") {
    // {a,b} at 1, {c} at 2, {a,b} at 3: slot 2 decodes c alone; the slot-1
    // information is lost, so slot 3 cannot complete a window for a and b.
    std::vector<SlotRecord> slots;
    slots.push_back(make_slot_record(1, {1, 2}, 2));
    slots.push_back(make_slot_record(2, {3}, 2));
    slots.push_back(make_slot_record(3, {1, 2}, 2));
    auto events = run_detector(slots, 2);
    REQUIRE(events.size() == 1);
    CHECK(events[0].size == 1);
    CHECK(events[0].window_start == 2);
    CHECK(events[0].window_end == 2);
    CHECK(events[0].decoded == std::vector<PacketId>{3});
}

TEST_CASE("bad slots never decode") {
    std::vector<SlotRecord> slots;
    for (int t = 1; t <= 10; ++t) slots.push_back(make_slot_record(t, {1, 2, 3, 4}, 3));
    CHECK(run_detector(slots, 3).empty());
}

TEST_CASE("slots must strictly increase") {
    DecodingDetector det(4);
    det.advance(make_slot_record(5, {1}, 4));
    CHECK_THROWS_AS(det.advance(make_slot_record(5, {2}, 4)), std::invalid_argument);
    CHECK_THROWS_AS(det.advance(make_slot_record(4, {2}, 4)), std::invalid_argument);
}

TEST_CASE("detector matches the reference decoder on random traces") {
    std::mt19937 gen(12345);
    for (int kappa : {3, 4, 5}) {
        for (int trial = 0; trial < 60; ++trial) {
            auto slots = random_trace(gen, kappa, 200, 8);
            auto got = run_detector(slots, kappa);
            auto want = RefDecoder{kappa, 2 * std::size_t(kappa)}.replay(slots);
            CHECK(same_events(got, want));
        }
    }
}

TEST_CASE("event windows are disjoint and information-theoretically sound") {
    std::mt19937 gen(999);
    for (int trial = 0; trial < 40; ++trial) {
        int kappa = 4;
        auto slots = random_trace(gen, kappa, 300, 10);
        auto events = run_detector(slots, kappa);
        Slot prev_end = -1;
        for (const auto& ev : events) {
            CHECK(ev.window_start > prev_end);
            CHECK(ev.window_start <= ev.window_end);
            prev_end = ev.window_end;
            CHECK(ev.size == int(ev.decoded.size()));
            CHECK(ev.size >= 1);
            // at least `size` good slots inside the window, recounted from the trace
            int good = 0;
            for (const auto& rec : slots)
                if (rec.cls == SlotClass::Good && rec.slot_index >= ev.window_start &&
                    rec.slot_index <= ev.window_end)
                    ++good;
            CHECK(good >= ev.size);
        }
    }
}

TEST_CASE("replaying any prefix yields a prefix of the events") {
    std::mt19937 gen(777);
    int kappa = 4;
    auto slots = random_trace(gen, kappa, 120, 6);
    auto full = run_detector(slots, kappa);
    for (std::size_t cut : {std::size_t(13), std::size_t(47), std::size_t(90)}) {
        std::vector<SlotRecord> prefix(slots.begin(), slots.begin() + cut);
        auto part = run_detector(prefix, kappa);
        REQUIRE(part.size() <= full.size());
        for (std::size_t i = 0; i < part.size(); ++i) {
            CHECK(part[i].window_end == full[i].window_end);
            CHECK(part[i].decoded == full[i].decoded);
        }
        // no full-trace event ending within the prefix is missing
        std::size_t in_range = 0;
        for (const auto& ev : full)
            if (ev.window_end < Slot(cut)) ++in_range;
        CHECK(part.size() == in_range);
    }
}

TEST_CASE("lookback bound discards old good slots for good") {
    // With unbounded lookback the three slots decode all three ids; with
    // lookback 2 the first slot is dropped before slot 2 arrives, the
    // remaining windows stay short of their transmitter counts, and nothing
    // ever fires.
    std::vector<SlotRecord> slots;
    slots.push_back(make_slot_record(0, {1, 2}, 2));
    slots.push_back(make_slot_record(1, {1, 3}, 2));
    slots.push_back(make_slot_record(2, {2, 3}, 2));
    auto unbounded = run_detector(slots, 2, 8);
    REQUIRE(unbounded.size() == 1);
    CHECK(unbounded[0].size == 3);
    CHECK(unbounded[0].window_start == 0);

    auto bounded = run_detector(slots, 2, 2);
    CHECK(bounded.empty());
}

TEST_CASE("a packet heard only in a dropped slot is decoded by a later window only") {
    std::vector<SlotRecord> slots;
    slots.push_back(make_slot_record(0, {1, 2}, 2));  // will be dropped, lookback 2
    slots.push_back(make_slot_record(1, {1, 3}, 2));
    slots.push_back(make_slot_record(2, {1, 3}, 2));
    auto events = run_detector(slots, 2, 2);
    REQUIRE(events.size() == 1);
    CHECK(events[0].window_start == 1);
    CHECK(events[0].window_end == 2);
    CHECK(events[0].decoded == std::vector<PacketId>{1, 3});  // 2 is lost
}

TEST_CASE("detector state accessors") {
    DecodingDetector det(8);
    CHECK(det.kappa() == 8);
    CHECK(det.lookback() == 16);
    CHECK(det.last_event_end() == -1);
    det.advance(make_slot_record(0, {1, 2}, 8));
    CHECK(det.pending_good_slots() == 1);
    det.advance(make_slot_record(1, {1, 2}, 8));
    CHECK(det.pending_good_slots() == 0);  // event consumed both slots
    CHECK(det.last_event_end() == 1);
}

#include "cbsim/channel.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cbsim {

const char* to_string(SlotClass c) {
    switch (c) {
        case SlotClass::Silent: return "silent";
        case SlotClass::Good: return "good";
        case SlotClass::Bad: return "bad";
    }
    return "?";
}

SlotClass classify_slot(std::size_t transmitter_count, int kappa) {
    if (kappa < 1) throw std::invalid_argument("classify_slot: kappa must be >= 1");
    if (transmitter_count == 0) return SlotClass::Silent;
    if (transmitter_count <= std::size_t(kappa)) return SlotClass::Good;
    return SlotClass::Bad;
}

SlotClass classify_slot(std::span<const PacketId> transmitters, int kappa) {
    return classify_slot(transmitters.size(), kappa);
}

SlotRecord make_slot_record(Slot t, std::vector<PacketId> transmitters, int kappa) {
    std::sort(transmitters.begin(), transmitters.end());
    transmitters.erase(std::unique(transmitters.begin(), transmitters.end()), transmitters.end());
    SlotRecord rec;
    rec.slot_index = t;
    rec.cls = classify_slot(transmitters.size(), kappa);
    rec.transmitters = std::move(transmitters);
    return rec;
}

DecodingDetector::DecodingDetector(int kappa, std::size_t lookback, bool capture_windows)
    : kappa_(kappa),
      lookback_(lookback == 0 ? 2 * std::size_t(kappa) : lookback),
      capture_windows_(capture_windows) {
    if (kappa < 1) throw std::invalid_argument("DecodingDetector: kappa must be >= 1");
    if (lookback_ < 1) throw std::invalid_argument("DecodingDetector: lookback must be >= 1");
}

void DecodingDetector::drop_oldest() {
    for (PacketId id : pending_.front().last_seen_here) last_occurrence_.erase(id);
    pending_.pop_front();
    ++base_;
}

DecodingEvent DecodingDetector::emit(std::size_t start, Slot t) {
    DecodingEvent ev;
    ev.window_start = pending_[start].slot.slot_index;
    ev.window_end = t;
    if (capture_windows_) last_window_.clear();
    for (std::size_t i = start; i < pending_.size(); ++i) {
        ev.decoded.insert(ev.decoded.end(), pending_[i].last_seen_here.begin(),
                          pending_[i].last_seen_here.end());
        if (capture_windows_) last_window_.push_back(pending_[i].slot);
    }
    std::sort(ev.decoded.begin(), ev.decoded.end());
    ev.size = int(ev.decoded.size());
    last_event_end_ = t;
    base_ += pending_.size();
    pending_.clear();
    last_occurrence_.clear();
    return ev;
}

std::optional<DecodingEvent> DecodingDetector::advance(Slot t, SlotClass cls,
                                                       std::span<const PacketId> transmitters) {
    if (t <= last_slot_) throw std::invalid_argument("DecodingDetector: slot index must increase");
    last_slot_ = t;
    if (cls != SlotClass::Good) return std::nullopt;

    if (pending_.size() == lookback_) drop_oldest();
    pending_.push_back(Pending{});
    Pending& entry = pending_.back();
    entry.slot.slot_index = t;
    entry.slot.cls = SlotClass::Good;
    entry.slot.transmitters.assign(transmitters.begin(), transmitters.end());
    const std::uint64_t e = base_ + pending_.size() - 1;

    for (PacketId id : entry.slot.transmitters) {
        auto it = last_occurrence_.find(id);
        if (it != last_occurrence_.end()) {
            auto& old_bucket = pending_[it->second.entry - base_].last_seen_here;
            std::uint32_t p = it->second.pos;
            old_bucket[p] = old_bucket.back();
            last_occurrence_[old_bucket[p]].pos = p;
            old_bucket.pop_back();
        }
        auto& bucket = entry.last_seen_here;
        bucket.push_back(id);
        last_occurrence_[id] = IdPos{e, std::uint32_t(bucket.size() - 1)};
    }

    // distinct(k) = packets whose latest good slot lies in the suffix [k, end];
    // the window starting at pending_[k] qualifies once it holds at least that
    // many good slots. Scan from the oldest start so ties pick the widest window.
    std::size_t before = 0;
    for (std::size_t k = 0; k < pending_.size(); ++k) {
        std::size_t distinct = last_occurrence_.size() - before;
        std::size_t good = pending_.size() - k;
        if (good >= distinct) return emit(k, t);
        before += pending_[k].last_seen_here.size();
    }
    return std::nullopt;
}

std::optional<DecodingEvent> DecodingDetector::advance(const SlotRecord& slot) {
    return advance(slot.slot_index, slot.cls, slot.transmitters);
}

SlotTrace load_slot_trace(const std::string& path, int kappa) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open slot trace: " + path);
    SlotTrace trace;
    std::unordered_map<std::string, PacketId> intern;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 't,<id;id;...>'");
        Slot t;
        try {
            t = std::stoll(line.substr(0, comma));
        } catch (const std::exception&) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad slot index");
        }
        if (t < 0) throw std::runtime_error(path + ":" + std::to_string(line_no) + ": negative slot index");
        std::vector<PacketId> ids;
        std::string field = line.substr(comma + 1);
        std::stringstream ss(field);
        std::string tok;
        while (std::getline(ss, tok, ';')) {
            if (tok.empty()) continue;
            auto [it, inserted] = intern.try_emplace(tok, PacketId(trace.id_names.size()));
            if (inserted) trace.id_names.push_back(tok);
            ids.push_back(it->second);
        }
        trace.slots.push_back(make_slot_record(t, std::move(ids), kappa));
    }
    return trace;
}

}  // namespace cbsim

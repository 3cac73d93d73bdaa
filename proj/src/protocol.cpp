#include "cbsim/protocol.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace cbsim {

namespace {
constexpr int kStepCap = 2;  // kappa^{(2-2)/4} = 1
}

const char* to_string(EpochKind k) {
    switch (k) {
        case EpochKind::Silent: return "silent";
        case EpochKind::Successful: return "successful";
        case EpochKind::Overfull: return "overfull";
    }
    return "?";
}

double joining_probability(int kappa, int step) {
    if (step >= kStepCap) return 1.0;
    return std::pow(double(kappa), 0.25 * double(step - 2));
}

double updated_probability(double p, EpochKind kind, int kappa) {
    const double q = std::pow(double(kappa), 0.25);
    switch (kind) {
        case EpochKind::Silent: return std::min(1.0, p * q);
        case EpochKind::Overfull: return p / q;
        case EpochKind::Successful: return p;
    }
    return p;
}

std::optional<EpochKind> end_epoch_classify(std::size_t joiner_count, int slots_elapsed,
                                            int kappa) {
    if (kappa < 1) throw std::invalid_argument("end_epoch_classify: kappa must be >= 1");
    if (slots_elapsed < 1) throw std::invalid_argument("end_epoch_classify: slot count must be >= 1");
    if (joiner_count == 0) return slots_elapsed == 1 ? std::optional(EpochKind::Silent) : std::nullopt;
    if (joiner_count <= std::size_t(kappa)) {
        if (slots_elapsed == int(joiner_count)) return EpochKind::Successful;
        return std::nullopt;
    }
    if (slots_elapsed == kappa) return EpochKind::Overfull;
    return std::nullopt;
}

ProtocolState::ProtocolState(int kappa, std::uint64_t seed) : kappa_(kappa), rng_(seed) {
    if (kappa < 6) throw std::invalid_argument("ProtocolState: kappa must be >= 6");
}

double ProtocolState::prob_of_step(int step) const {
    if (step >= kStepCap) return 1.0;
    std::size_t idx = std::size_t(kStepCap - step);
    while (prob_cache_.size() <= idx)
        prob_cache_.push_back(joining_probability(kappa_, kStepCap - int(prob_cache_.size())));
    return prob_cache_[idx];
}

void ProtocolState::refresh_aggregates() {
    contention_ = 0;
    for (const auto& [step, count] : step_counts_)
        contention_ += double(count) * prob_of_step(step);
    p_min_ = step_counts_.empty() ? 1.0 : prob_of_step(step_counts_.begin()->first);
}

void ProtocolState::inject(std::int64_t count, Slot slot) {
    if (count < 0) throw std::invalid_argument("inject: count must be >= 0");
    for (std::int64_t k = 0; k < count; ++k) {
        PacketId id = PacketId(arrival_.size());
        arrival_.push_back(slot);
        delivery_.push_back(-1);
        status_.push_back(PacketStatus::Inactive);
        inactive_.push_back(id);
    }
}

const std::vector<PacketId>& ProtocolState::begin_epoch() {
    if (epoch_in_progress_) throw std::logic_error("begin_epoch: epoch already in progress");
    joiners_.clear();
    joiner_rows_.clear();
    for (std::size_t row = 0; row < active_.size(); ++row) {
        if (rng_.next_double() < prob_of_step(active_[row].step)) {
            joiners_.push_back(active_[row].id);
            joiner_rows_.push_back(std::uint32_t(row));
        }
    }
    epoch_in_progress_ = true;
    epoch_elapsed_ = 0;
    return joiners_;
}

std::optional<EpochKind> ProtocolState::advance_epoch_slot() {
    if (!epoch_in_progress_) throw std::logic_error("advance_epoch_slot: no epoch in progress");
    ++epoch_elapsed_;
    return end_epoch_classify(joiners_.size(), epoch_elapsed_, kappa_);
}

EpochOutcome ProtocolState::apply_updates(EpochKind kind, Slot end_slot,
                                          ActivationBreakdown* breakdown) {
    if (!epoch_in_progress_) throw std::logic_error("apply_updates: no epoch in progress");

    EpochOutcome out;
    out.kind = kind;
    out.length = epoch_elapsed_;

    switch (kind) {
        case EpochKind::Successful: {
            std::size_t write = 0, next = 0;
            for (std::size_t row = 0; row < active_.size(); ++row) {
                if (next < joiner_rows_.size() && joiner_rows_[next] == row) {
                    const ActiveEntry& e = active_[row];
                    status_[e.id] = PacketStatus::Delivered;
                    delivery_[e.id] = end_slot;
                    auto it = step_counts_.find(e.step);
                    if (--it->second == 0) step_counts_.erase(it);
                    ++delivered_;
                    ++next;
                } else {
                    active_[write++] = active_[row];
                }
            }
            active_.resize(write);
            last_delivery_slot_ = end_slot;
            break;
        }
        case EpochKind::Overfull: {
            for (auto& e : active_) --e.step;
            std::map<int, std::int64_t> shifted;
            for (const auto& [step, count] : step_counts_) shifted[step - 1] = count;
            step_counts_ = std::move(shifted);
            break;
        }
        case EpochKind::Silent: {
            for (auto& e : active_) e.step = std::int16_t(std::min<int>(e.step + 1, kStepCap));
            std::map<int, std::int64_t> shifted;
            for (const auto& [step, count] : step_counts_)
                shifted[std::min(step + 1, kStepCap)] += count;
            step_counts_ = std::move(shifted);

            if (breakdown) {
                refresh_aggregates();
                breakdown->contention_before_activation = contention_;
                breakdown->p_min_before_activation = p_min_;
            }

            // Packets hear the silence only if they arrived strictly before it.
            std::size_t head = inactive_head_;
            while (head < inactive_.size() && arrival_[inactive_[head]] < end_slot) ++head;
            std::int64_t activated = std::int64_t(head - inactive_head_);
            if (activated > 0) {
                for (std::size_t i = inactive_head_; i < head; ++i) {
                    PacketId id = inactive_[i];
                    status_[id] = PacketStatus::Active;
                    assert(active_.empty() || active_.back().id < id);
                    active_.push_back(ActiveEntry{id, 0});
                }
                step_counts_[0] += activated;
                inactive_head_ = head;
                if (inactive_head_ == inactive_.size()) {
                    inactive_.clear();
                    inactive_head_ = 0;
                }
            }
            if (breakdown) breakdown->activated = activated;
            break;
        }
    }

    refresh_aggregates();
    out.joiners = std::move(joiners_);
    joiners_.clear();
    joiner_rows_.clear();
    epoch_in_progress_ = false;
    epoch_elapsed_ = 0;
    return out;
}

Packet ProtocolState::packet(PacketId id) const {
    if (std::size_t(id) >= arrival_.size()) throw std::out_of_range("packet: unknown id");
    Packet p;
    p.id = id;
    p.arrival_slot = arrival_[id];
    p.status = status_[id];
    if (p.status == PacketStatus::Active) {
        auto it = std::lower_bound(active_.begin(), active_.end(), id,
                                   [](const ActiveEntry& e, PacketId v) { return e.id < v; });
        p.join_prob = prob_of_step(it->step);
    }
    if (p.status == PacketStatus::Delivered) p.delivery_slot = delivery_[id];
    return p;
}

std::vector<std::int64_t> ProtocolState::delivered_latencies() const {
    std::vector<std::int64_t> out;
    out.reserve(std::size_t(delivered_));
    for (std::size_t id = 0; id < delivery_.size(); ++id)
        if (delivery_[id] >= 0) out.push_back(delivery_[id] - arrival_[id]);
    return out;
}

}  // namespace cbsim

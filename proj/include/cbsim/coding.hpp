#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cbsim/channel.hpp"
#include "cbsim/rng.hpp"

namespace cbsim {

enum class CoeffMode { Binary, Random };

// One row per decoded packet (ascending id), one column per good slot of a
// decoding window (slot order). Entry (p, s) is nonzero iff packet p
// transmitted in good slot s: 1 in binary mode, a uniformly random nonzero
// coefficient in random mode.
struct TransmissionMatrix {
    std::vector<PacketId> packets;      // row labels
    std::vector<Slot> slots;            // column labels
    std::vector<std::uint8_t> entries;  // row-major

    std::size_t rows() const { return packets.size(); }
    std::size_t cols() const { return slots.size(); }
    std::uint8_t at(std::size_t r, std::size_t c) const { return entries[r * cols() + c]; }
    bool square() const { return rows() == cols(); }
};

// One payload of `payload_len` field elements per packet, row-major.
struct MessageVector {
    std::size_t payload_len = 0;
    std::vector<std::uint8_t> data;

    std::size_t count() const { return payload_len == 0 ? 0 : data.size() / payload_len; }
    std::uint8_t at(std::size_t packet, std::size_t i) const {
        return data[packet * payload_len + i];
    }
    bool operator==(const MessageVector&) const = default;
};

// Coefficient draws are consumed column by column (slot order), and within a
// column row by row, for the nonzero positions only.
TransmissionMatrix build_matrix(const std::vector<SlotRecord>& good_slots,
                                const std::vector<PacketId>& decoded, CoeffMode mode,
                                CounterRng& rng);

MessageVector random_messages(std::size_t count, std::size_t payload_len, CounterRng& rng);

// m * T. Output is column-major per slot: entry (s, i) = sum over packets of
// coeff(p, s) * payload_p[i], laid out as cols() rows of payload_len bytes.
std::vector<std::uint8_t> received_sums(const MessageVector& m, const TransmissionMatrix& T);

// Recovers m from m * T for square T; nullopt when the coefficient draw is
// singular. Requires T square.
std::optional<MessageVector> decode(const std::vector<std::uint8_t>& sums,
                                    const TransmissionMatrix& T, std::size_t payload_len);

}  // namespace cbsim

#include "cbsim/coding.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

#include "cbsim/gf256.hpp"

namespace cbsim {

TransmissionMatrix build_matrix(const std::vector<SlotRecord>& good_slots,
                                const std::vector<PacketId>& decoded, CoeffMode mode,
                                CounterRng& rng) {
    TransmissionMatrix T;
    T.packets = decoded;
    std::sort(T.packets.begin(), T.packets.end());
    std::unordered_map<PacketId, std::size_t> row_of;
    for (std::size_t r = 0; r < T.packets.size(); ++r) row_of[T.packets[r]] = r;

    T.slots.reserve(good_slots.size());
    for (const auto& s : good_slots) {
        if (s.cls != SlotClass::Good)
            throw std::invalid_argument("build_matrix: window must contain good slots only");
        T.slots.push_back(s.slot_index);
    }
    T.entries.assign(T.rows() * T.cols(), 0);
    for (std::size_t c = 0; c < good_slots.size(); ++c) {
        for (PacketId id : good_slots[c].transmitters) {
            auto it = row_of.find(id);
            if (it == row_of.end())
                throw std::invalid_argument("build_matrix: transmitter outside decoded set");
            std::uint8_t coeff = mode == CoeffMode::Binary ? 1 : rng.next_nonzero_byte();
            T.entries[it->second * T.cols() + c] = coeff;
        }
    }
    return T;
}

MessageVector random_messages(std::size_t count, std::size_t payload_len, CounterRng& rng) {
    MessageVector m;
    m.payload_len = payload_len;
    m.data.resize(count * payload_len);
    for (auto& b : m.data) b = std::uint8_t(rng.next_u64() & 0xff);
    return m;
}

std::vector<std::uint8_t> received_sums(const MessageVector& m, const TransmissionMatrix& T) {
    if (m.count() != T.rows()) throw std::invalid_argument("received_sums: dimension mismatch");
    const std::size_t L = m.payload_len;
    std::vector<std::uint8_t> sums(T.cols() * L, 0);
    for (std::size_t p = 0; p < T.rows(); ++p) {
        for (std::size_t s = 0; s < T.cols(); ++s) {
            std::uint8_t coeff = T.at(p, s);
            if (coeff == 0) continue;
            for (std::size_t i = 0; i < L; ++i)
                sums[s * L + i] = gf256::add(sums[s * L + i], gf256::mul(coeff, m.at(p, i)));
        }
    }
    return sums;
}

std::optional<MessageVector> decode(const std::vector<std::uint8_t>& sums,
                                    const TransmissionMatrix& T, std::size_t payload_len) {
    if (!T.square()) throw std::invalid_argument("decode: matrix must be square");
    const std::size_t n = T.rows();
    if (sums.size() != n * payload_len) throw std::invalid_argument("decode: sums size mismatch");

    // Solve A x = sums where A[s][p] = T[p][s], by Gaussian elimination.
    std::vector<std::uint8_t> a(n * n);
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t p = 0; p < n; ++p) a[s * n + p] = T.at(p, s);
    std::vector<std::uint8_t> rhs = sums;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        while (pivot < n && a[pivot * n + col] == 0) ++pivot;
        if (pivot == n) return std::nullopt;  // singular draw
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a[col * n + j], a[pivot * n + j]);
            for (std::size_t j = 0; j < payload_len; ++j)
                std::swap(rhs[col * payload_len + j], rhs[pivot * payload_len + j]);
        }
        std::uint8_t inv = gf256::inv(a[col * n + col]);
        for (std::size_t j = col; j < n; ++j) a[col * n + j] = gf256::mul(a[col * n + j], inv);
        for (std::size_t j = 0; j < payload_len; ++j)
            rhs[col * payload_len + j] = gf256::mul(rhs[col * payload_len + j], inv);
        for (std::size_t row = 0; row < n; ++row) {
            if (row == col) continue;
            std::uint8_t f = a[row * n + col];
            if (f == 0) continue;
            for (std::size_t j = col; j < n; ++j)
                a[row * n + j] = gf256::add(a[row * n + j], gf256::mul(f, a[col * n + j]));
            for (std::size_t j = 0; j < payload_len; ++j)
                rhs[row * payload_len + j] =
                    gf256::add(rhs[row * payload_len + j], gf256::mul(f, rhs[col * payload_len + j]));
        }
    }

    MessageVector m;
    m.payload_len = payload_len;
    m.data = std::move(rhs);
    return m;
}

}  // namespace cbsim

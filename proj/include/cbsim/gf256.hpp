#pragma once

#include <array>
#include <cstdint>

namespace cbsim::gf256 {

// GF(2^8) with the AES reduction polynomial x^8 + x^4 + x^3 + x + 1 (0x11b);
// log/exp tables over the generator 0x03.

struct Tables {
    std::array<std::uint8_t, 510> exp{};
    std::array<std::uint16_t, 256> log{};
};

consteval Tables make_tables() {
    Tables t{};
    int x = 1;
    for (int i = 0; i < 255; ++i) {
        t.exp[i] = std::uint8_t(x);
        t.log[x] = std::uint16_t(i);
        int doubled = x << 1;
        if (doubled & 0x100) doubled ^= 0x11b;
        x = doubled ^ x;  // multiply by 0x03
    }
    for (int i = 255; i < 510; ++i) t.exp[i] = t.exp[i - 255];
    return t;
}

inline constexpr Tables tables = make_tables();

constexpr std::uint8_t add(std::uint8_t a, std::uint8_t b) { return a ^ b; }

constexpr std::uint8_t mul(std::uint8_t a, std::uint8_t b) {
    if (a == 0 || b == 0) return 0;
    return tables.exp[tables.log[a] + tables.log[b]];
}

// a != 0
constexpr std::uint8_t inv(std::uint8_t a) { return tables.exp[255 - tables.log[a]]; }

constexpr std::uint8_t div(std::uint8_t a, std::uint8_t b) { return mul(a, inv(b)); }

}  // namespace cbsim::gf256

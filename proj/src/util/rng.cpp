#include "util/rng.hpp"

#include <cmath>
#include <numbers>

namespace memsteer {

uint64_t fnv1a64(const void* data, size_t n, uint64_t state) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        state ^= p[i];
        state *= 0x100000001b3ull;
    }
    return state;
}

uint64_t fnv1a64(std::string_view s, uint64_t state) { return fnv1a64(s.data(), s.size(), state); }

uint64_t derive_seed(uint64_t base, std::string_view label) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((base >> (8 * i)) & 0xff);
    return fnv1a64(label, fnv1a64(bytes, 8));
}

double Rng::normal() {
    // u1 in (0, 1] so the log is finite.
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

int64_t Rng::uniform_int(int64_t lo, int64_t hi) {
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<int64_t>(next_u64());  // full 64-bit range
    uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    uint64_t r;
    do {
        r = next_u64();
    } while (r >= limit);
    return lo + static_cast<int64_t>(r % span);
}

}  // namespace memsteer

#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace memsteer {

uint64_t fnv1a64(const void* data, size_t n, uint64_t state = 0xcbf29ce484222325ull);
uint64_t fnv1a64(std::string_view s, uint64_t state = 0xcbf29ce484222325ull);

// Stable child-seed derivation for pipeline stages.
uint64_t derive_seed(uint64_t base, std::string_view label);

// mt19937_64 engine with hand-rolled output transforms. std::*_distribution
// is implementation-defined, so conversions are explicit to keep streams
// reproducible across standard libraries.
class Rng {
  public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller without a cached spare.
    double normal();

    // Inclusive bounds, rejection sampled to avoid modulo bias.
    int64_t uniform_int(int64_t lo, int64_t hi);

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(uniform_int(0, static_cast<int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::mt19937_64 eng_;
};

}  // namespace memsteer

#ifndef GIBBSCERT_RNG_HPP
#define GIBBSCERT_RNG_HPP

#include <cmath>
#include <cstdint>

namespace gibbscert {

/// Counter-based generator: the draw at position n of stream (seed, stream) is
/// a pure function of (seed, stream, n), so worker layout never changes output.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_(mix(seed ^ mix(stream ^ 0x9E3779B97F4A7C15ULL))) {}

    std::uint64_t next_u64() { return mix(key_ + (counter_++) * 0x9E3779B97F4A7C15ULL); }

    double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01(), u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

struct RngSpec {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    CounterRng at_stream(std::uint64_t offset) const {
        return CounterRng(seed, stream + offset);
    }
};

}  // namespace gibbscert

#endif

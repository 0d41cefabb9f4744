#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace bels {

// mt19937_64 with hand-rolled output mappings. The standard distributions are
// implementation-defined, so mapping raw draws ourselves keeps generated
// streams identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform on [-1, 1]; the random-weight convention used throughout.
    double uniform_sym() { return 2.0 * uniform01() - 1.0; }

    std::uint64_t uniform_int(std::uint64_t n) { return gen_() % n; }

    // Box-Muller, caching the paired draw.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = 1.0 - uniform01();  // (0, 1] keeps the log finite
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * M_PI * u2;
        cached_ = r * std::sin(theta);
        has_cached_ = true;
        return r * std::cos(theta);
    }

private:
    std::mt19937_64 gen_;
    bool has_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace bels

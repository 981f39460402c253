#pragma once
#include <cmath>
#include <cstdint>
#include <random>

#include "bilat/units.hpp"

namespace bilat {

// Deterministic RNG for synthetic data. Gaussian draws use Box-Muller rather
// than std::normal_distribution so a given seed produces the same stream on
// every standard library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // uniform in [0, 1)
    double uniform() {
        return (eng_() >> 11) * (1.0 / 9007199254740992.0); // 53-bit mantissa
    }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * units::pi * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * units::pi * u2);
    }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace bilat

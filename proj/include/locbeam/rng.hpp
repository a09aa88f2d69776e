#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace locbeam {

// Deterministic random stream with explicit substream derivation.
//
// Every Monte Carlo consumer owns its own stream derived from
// (master seed, purpose tag, indices...), so trials are reproducible,
// independent of scheduling, and adding trials never disturbs earlier ones.
// Draw primitives are implemented directly on top of the 64-bit engine so
// sequences do not depend on the standard library's distribution internals.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    static RandomStream derive(std::uint64_t seed,
                               std::initializer_list<std::uint64_t> path) {
        std::vector<std::uint32_t> words;
        words.push_back(static_cast<std::uint32_t>(seed));
        words.push_back(static_cast<std::uint32_t>(seed >> 32));
        for (std::uint64_t p : path) {
            words.push_back(static_cast<std::uint32_t>(p));
            words.push_back(static_cast<std::uint32_t>(p >> 32));
        }
        std::seed_seq seq(words.begin(), words.end());
        RandomStream s(0);
        s.engine_.seed(seq);
        return s;
    }

    // uniform on [0, 1): 53-bit mantissa
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // uniform on (0, 1): safe for log()
    double uniform_open() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // -1 or +1 with equal probability
    double sign() { return uniform() < 0.5 ? -1.0 : 1.0; }

    // circularly-symmetric complex Gaussian, E|z|^2 = 1 (Box-Muller)
    std::complex<double> complex_gaussian() {
        const double r = std::sqrt(-std::log(uniform_open()));
        const double phase = 2.0 * M_PI * uniform();
        return {r * std::cos(phase), r * std::sin(phase)};
    }

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace locbeam

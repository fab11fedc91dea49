#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace sphereflow {

// Deterministic random source. std::mt19937_64 has a fully specified output
// sequence; the distribution transforms below are spelled out here because the
// standard library ones are implementation-defined and would break the
// byte-identical-reports contract.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform() {  // [0, 1)
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t bits() { return eng_(); }

    double normal() {
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
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Uniform point on S^{d-1} via a normalized Gaussian vector.
    std::vector<double> sphere_point(int d) {
        std::vector<double> x(d);
        double n2 = 0.0;
        do {
            n2 = 0.0;
            for (int i = 0; i < d; ++i) {
                x[i] = normal();
                n2 += x[i] * x[i];
            }
        } while (n2 < 1e-300);
        const double inv = 1.0 / std::sqrt(n2);
        for (int i = 0; i < d; ++i) x[i] *= inv;
        return x;
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace sphereflow

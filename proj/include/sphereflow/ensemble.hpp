#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sphereflow/linalg.hpp"

namespace sphereflow {

// Weighted atoms on S^{d-1}. Coordinates are stored flat (n x d, row major)
// so the pairwise kernels can stream them.
struct ParticleEnsemble {
    int d = 0;
    std::vector<double> x;  // n*d
    std::vector<double> w;  // n, positive, sums to 1

    int size() const { return static_cast<int>(w.size()); }
    std::span<const double> point(int i) const {
        return {x.data() + static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d)};
    }
    std::span<double> point_mut(int i) {
        return {x.data() + static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d)};
    }

    void validate() const;  // throws on any type-invariant violation
};

ParticleEnsemble make_ensemble(int d, std::vector<double> coords, std::vector<double> weights);

// Periodic grid density on [0, 2pi): cell k is centered at theta_k = 2 pi k/N
// and carries the constant value values[k]. (2pi/N) * sum(values) must be 1.
struct CircleDensity {
    int N = 0;
    std::vector<double> values;

    double cell_width() const { return 2.0 * M_PI / N; }
    double cell_center(int k) const { return 2.0 * M_PI * k / N; }
    double total_mass() const;
    void validate() const;
};

// ---- named initializations ----

// Three atoms on the circle at angles pi/2, -pi/2 - xi, -pi/2 + xi with
// weights 1/50, 49/100, 49/100. Constructed with exact mirror symmetry in
// floating point: the top atom is (0,1) and the two south atoms share the
// same cosine/sine values with opposite first coordinates.
ParticleEnsemble make_example_2_4(double xi);

// (1-eps) delta_{pi/2} + eps delta_{-pi/2}.
ParticleEnsemble make_example_2_1(double eps);

// Two-bump density: mass 1/3 in [-eta, eta] around 0 and mass 2/3 in
// [pi-xi, pi+xi] around pi, each bump a smooth compactly supported mollifier.
CircleDensity make_example_2_6(double eta, double xi, int N);

// Equal-weight atoms by inverse-CDF sampling of the piecewise-constant density.
ParticleEnsemble sample_from_circle_density(const CircleDensity& f, int n, std::uint64_t seed);

ParticleEnsemble uniform_ensemble(int d, int n, std::uint64_t seed);

// Uniform atoms restricted to the cap of angle alpha around `center`
// (rejection from the cap's boundary distribution via tangent resampling).
ParticleEnsemble cap_uniform_ensemble(int d, int n, std::span<const double> center,
                                      double alpha, std::uint64_t seed);

// Atoms sampled from the smooth density proportional to 1 + a <x, e_d>
// (rejection against the uniform measure); mean has norm a/d in expectation.
ParticleEnsemble tilted_ensemble(int d, int n, double a, std::uint64_t seed);

// ---- serialization ----

std::string ensemble_to_json(const ParticleEnsemble& e);
ParticleEnsemble ensemble_from_json(const std::string& text);
std::string circle_density_to_json(const CircleDensity& f);
CircleDensity circle_density_from_json(const std::string& text);

// CSV rows "x0,x1,...,x{d-1},weight"; leading header line optional.
ParticleEnsemble ensemble_from_csv(const std::string& text);

double angle_of(std::span<const double> p);        // atan2 on the circle
Vec circle_point(double theta);                    // (cos, sin)

}  // namespace sphereflow

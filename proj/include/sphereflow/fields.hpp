#pragma once

#include <span>
#include <vector>

#include "sphereflow/ensemble.hpp"
#include "sphereflow/kernel.hpp"
#include "sphereflow/sphere.hpp"

namespace sphereflow {

// Vector fields driving the dynamics. "General" is the plain field
//   Y[nu](x) = sum_j w_j phi'(<A x, y_j>) P_x[y_j]
// and "Gradient" carries the A preconditioner on the moved point,
//   Xt[nu](x) = sum_j w_j phi'(<A x, y_j>) P_x[A y_j].
enum class FieldMode { General, Gradient };

// Sources with arbitrary positive total mass (sub-probability restrictions
// are legitimate inputs here).
struct SourceSet {
    int d = 0;
    std::span<const double> x;  // n*d
    std::span<const double> w;  // n
    int size() const { return static_cast<int>(w.size()); }
    std::span<const double> point(int i) const {
        return x.subspan(static_cast<std::size_t>(i) * d, d);
    }
};

inline SourceSet sources(const ParticleEnsemble& e) {
    return {e.d, {e.x.data(), e.x.size()}, {e.w.data(), e.w.size()}};
}

// Single-point evaluations. Sums run over sources in ascending index order
// with compensated accumulation, so results do not depend on thread count.
Vec velocity_general(const SourceSet& nu, const KernelSpec& k, std::span<const double> at);
Vec velocity_gradient(const SourceSet& nu, const KernelSpec& k, std::span<const double> at);
Vec velocity_simple(const ParticleEnsemble& mu, double beta, std::span<const double> at);

// V = P_x[M] (the Kuramoto part) and W = Y - V, returned as a pair with
// V + W = Y exact.
std::pair<Vec, Vec> kuramoto_part_and_perturbation(const ParticleEnsemble& mu,
                                                   const KernelSpec& k,
                                                   std::span<const double> at);

// Batch kernel: every target against every source. The parallel version
// splits over targets only; each target's reduction is sequential, making the
// output bit-identical to the serial reference.
void velocity_batch(const SourceSet& nu, const KernelSpec& k, FieldMode mode,
                    std::span<const double> targets, int n_targets,
                    std::span<double> out);
void velocity_batch_serial(const SourceSet& nu, const KernelSpec& k, FieldMode mode,
                           std::span<const double> targets, int n_targets,
                           std::span<double> out);

// Angular velocity on the circle (Eq. for d = 2): for atoms the exact sum,
// for densities the periodic-grid quadrature.
double velocity_circle(const ParticleEnsemble& mu, double beta, double theta);
double velocity_circle(const CircleDensity& f, double beta, double theta);

// Velocity table at all cell centers (offset 0) or all right interfaces
// (offset 1/2). Mirror-symmetric by construction: the antisymmetric kernel
// table is evaluated once per |offset| and paired as K(m)(f_{i-m} - f_{i+m}),
// so a symmetric density gets an exactly antisymmetric velocity and a uniform
// density gets exactly zero.
std::vector<double> circle_velocity_table(const CircleDensity& f, double beta,
                                          bool at_interfaces);

// Gnomonic pullback X(u) of the general field under a chart (sources must lie
// in the chart's upper hemisphere).
Vec gnomonic_pullback_field(const GnomonicChart& chart, const SourceSet& nu,
                            const KernelSpec& k, std::span<const double> u);

}  // namespace sphereflow

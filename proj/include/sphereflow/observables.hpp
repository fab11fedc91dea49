#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sphereflow/fields.hpp"

namespace sphereflow {

// ---- scalar diagnostics ----

// E_beta[mu] = (1/(2 beta)) sum_ij w_i w_j e^{beta <x_i, x_j>}
double energy_simple(const ParticleEnsemble& mu, double beta);
double energy_simple_dirac(double beta);  // value at a point mass, e^beta/(2 beta)

// E_phi[mu] = (1/2) sum_ij w_i w_j phi(<A x_i, x_j>); needs the antiderivative.
double energy_general(const ParticleEnsemble& mu, const KernelSpec& k);

struct MeanOrder {
    Vec M;
    double R = 0.0;
    Vec U;               // empty when undefined
    bool u_defined = false;
};
MeanOrder mean_and_order(const ParticleEnsemble& mu);
MeanOrder mean_and_order(const CircleDensity& f);

// I[mu] = sum_i w_i |Y[mu](x_i)|^2
double dissipation(const ParticleEnsemble& mu, const KernelSpec& k,
                   FieldMode mode = FieldMode::General);
double dissipation(const CircleDensity& f, double beta);

// dI/dt via the analytic pair form: sum_ij w_i w_j Q(x_i, x_j).
double dissipation_rate(const ParticleEnsemble& mu, const KernelSpec& k);

// The same double sum for an arbitrary positive measure (used by the cone
// inequality, whose two sides are degree-4 homogeneous in the weights).
double q_double_sum(const SourceSet& nu, const KernelSpec& k);
double dissipation_unnormalized(const SourceSet& nu, const KernelSpec& k);

struct CapMasses {
    double plus = 0.0;
    double minus = 0.0;
    double equatorial = 0.0;
};
CapMasses cap_masses(const ParticleEnsemble& mu, std::span<const double> U, double alpha);
CapMasses cap_masses(const CircleDensity& f, std::span<const double> U, double alpha);

// Quintic smoothstep in a between cos(alpha2) and cos(alpha1): 1 for
// a >= cos(alpha1), 0 for a <= cos(alpha2), with 0 <= xi' <= 2/(cos a1 - cos a2).
double xi_cutoff(double a, double alpha1, double alpha2);
double xi_cutoff_derivative(double a, double alpha1, double alpha2);
// integral of xi(-<y, U>) d mu
double xi_cutoff_mass(const ParticleEnsemble& mu, std::span<const double> U,
                      double alpha1, double alpha2);
double xi_cutoff_mass(const CircleDensity& f, std::span<const double> U,
                      double alpha1, double alpha2);

// W2 to a point mass is the quadratic mean geodesic distance (any d).
double w2_to_dirac(const ParticleEnsemble& mu, std::span<const double> x0);
double w2_to_dirac(const CircleDensity& f, double theta0);

// Exact circular optimal transport between atomic measures (d = 2): minimize
// the quantile-coupling cost over the cut, by ternary search on the
// convex-in-shift cost plus an exhaustive 2048-point fallback (and the exact
// breakpoint candidates when the instance is small).
struct CircularAtoms {
    std::vector<double> theta;  // angles in [0, 2pi)
    std::vector<double> w;      // positive, sums to 1
};
CircularAtoms circular_atoms(const ParticleEnsemble& mu);
CircularAtoms circular_atoms(const CircleDensity& f);
double w2_circle(const CircularAtoms& mu, const CircularAtoms& nu);
double w2_circle(const ParticleEnsemble& mu, const ParticleEnsemble& nu);

// L2 bookkeeping for circle densities: (2pi/N) sum f^2 and the cap-restricted sum.
double l2_norm_sq(const CircleDensity& f);
double f2_cap(const CircleDensity& f, std::span<const double> U, double alpha);
double f2_arc(const CircleDensity& f, double lo, double hi);  // arc [lo, hi) mod 2pi

// ---- snapshots ----

struct ObservableSnapshot {
    double t = 0.0;
    std::optional<double> E;
    Vec M;
    double R = 0.0;
    Vec U;
    double I = 0.0;
    std::optional<double> q_rate;
    std::optional<double> cap_plus, cap_minus;
    std::optional<double> xi_mass;
    std::optional<double> w2_to_ref;
    std::optional<double> l2;
    std::optional<double> f2_cap_minus;
};

struct SnapshotRequest {
    bool with_energy = true;
    bool with_q_rate = false;
    std::optional<double> cap_alpha;           // cap masses around U_t
    std::optional<std::pair<double, double>> xi_angles;
    std::optional<Vec> w2_ref_point;           // W2 to this Dirac
    FieldMode mode = FieldMode::General;
};

ObservableSnapshot take_snapshot(double t, const ParticleEnsemble& mu,
                                 const KernelSpec& k, const SnapshotRequest& req);
ObservableSnapshot take_snapshot_circle(double t, const CircleDensity& f, double beta,
                                        const SnapshotRequest& req);

struct TrajectoryRecord {
    std::vector<ObservableSnapshot> snapshots;
    std::string metadata_json;  // spec/config/seed/scenario, embedded in outputs

    void validate_times() const;  // strictly increasing
};

// Fixed column order: t,E,R,U0..U{d-1},I,cap_plus,cap_minus,xi_mass,W2,l2,f2cap
std::string trajectory_to_csv(const TrajectoryRecord& rec, int d);
std::string trajectory_to_jsonl(const TrajectoryRecord& rec);

std::string format_double(double v);  // shortest round-trip-stable decimal

}  // namespace sphereflow

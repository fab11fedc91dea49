#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sphereflow/observables.hpp"

namespace sphereflow {

struct InequalityVerdict {
    std::string name;
    double t = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
    double slack = 0.0;      // rhs - lhs
    bool regime_ok = true;   // were the statement's hypotheses met
};

InequalityVerdict make_verdict(std::string name, double t, double lhs, double rhs,
                               double tol, bool regime_ok);
std::string verdicts_to_jsonl(const std::vector<InequalityVerdict>& v);

// ---- variation formulas ----

struct VariationReport {
    double first_variation = 0.0;
    double second_variation = 0.0;
    // Lemma-style split: phi'' square term, phi' cross term, phi' norm term,
    // transport term <Ay, d_t V + nabla_V V>.
    double parts[4] = {0.0, 0.0, 0.0, 0.0};
};

// dE/dt for a tangent field sampled at the atoms:
//   sum_ij w_i w_j phi'(<A x_i, x_j>) <A x_j, V(x_i)>
double first_variation(const ParticleEnsemble& mu, const KernelSpec& k,
                       const std::vector<double>& V /* n x d, tangent */);

// Full second variation: V, d_t V and the covariant derivative nabla_V V are
// all sampled at the atoms (n x d each).
VariationReport second_variation_full(const ParticleEnsemble& mu, const KernelSpec& k,
                                      const std::vector<double>& V,
                                      const std::vector<double>& dtV,
                                      const std::vector<double>& covV);

// Simplified form valid at critical points, along the direction field
// X0(x) = P_x[w]. Throws NotCriticalError if any atom moves faster than 1e-8
// under the gradient field.
VariationReport second_variation_at_critical(const ParticleEnsemble& mu,
                                             const KernelSpec& k,
                                             std::span<const double> w);

double max_atom_speed(const ParticleEnsemble& mu, const KernelSpec& k, FieldMode mode);

// ---- saddle-point machinery ----

// sum_{i<=3} [2 lambda_i (1 - x_i^2 - y_i^2) - <Ax,y>(2 - x_i^2 - y_i^2 - 2 x_i y_i)]
// in the eigenbasis; nonnegative under the top-three hypothesis.
double pointwise_eigen_inequality(std::span<const double> x, std::span<const double> y,
                                  std::span<const double> lambdas);

struct EscapeResult {
    bool found = false;
    Vec direction;
    double value = 0.0;
    int eigen_index = -1;
};
// Scans w in the top-3 eigenframe (all d directions behind the flag).
EscapeResult escape_direction_search(const ParticleEnsemble& mu, const KernelSpec& k,
                                     bool full_sweep = false);

// ---- inequality checkers ----

// E_beta[delta_u] - E_beta[mu] <= 10 e^{-beta} I[mu], for cap-supported mu.
InequalityVerdict pl_inequality_check(const ParticleEnsemble& mu, double beta,
                                      std::span<const double> u, double alpha);

// Per-snapshot entropy production: q_rate <= -I + 100 * (mass outside the
// alpha-cap around U_t) + tol. Snapshots must carry q_rate and cap_plus.
std::vector<InequalityVerdict> entropy_production_check(const TrajectoryRecord& traj,
                                                        const KernelSpec& k, double alpha,
                                                        double tol = 1e-6);

struct HemisphereCriticalReport {
    double I = 0.0;
    bool is_critical = false;   // I <= 1e-16
    bool is_dirac = false;      // W2 to the nearest point mass <= 1e-6
    bool consistent = false;    // critical implies dirac
};
HemisphereCriticalReport hemisphere_critical_test(const ParticleEnsemble& mu,
                                                  const KernelSpec& k,
                                                  std::span<const double> U, double alpha);

// ---- explicit constants ----

struct SynchronizationConstants {
    double T0 = 0.0;
    double decay_rate = 0.0;  // (d-1)/16
    double amplitude = 0.0;   // ||f_0||_{L^2}
    double bound(double t) const {
        return amplitude * std::exp(-decay_rate * std::max(t - T0, 0.0));
    }
};
// T0 = max(8/R0, d-1) * (1e41 (d-1) R0^-14 + 1e26 R0^-6 log(l2_norm_sq)).
SynchronizationConstants theorem39_constants(double R0, int d, double l2_norm_sq);

// ---- attractor diagnostics ----

struct AttractorDiagnostics {
    double D = 1.0;        // min pairwise inner product over the markers
    double mass = 0.0;     // conserved pushforward mass of the seeded set
    double Gamma = 0.0;    // mass * (1 + D) - 1
    bool valid = false;    // D > sqrt(2)/2, so the pairwise min equals the hull infimum
};
AttractorDiagnostics attractor_diagnostics(std::span<const double> markers, int d,
                                           double seeded_mass);

// ---- rate fitting ----

struct RateFit {
    double rate = 0.0;       // negated slope of log(value) vs t
    double intercept = 0.0;
    double r_squared = 0.0;
};
RateFit rate_fit(const std::vector<std::pair<double, double>>& series, double t_start);

}  // namespace sphereflow

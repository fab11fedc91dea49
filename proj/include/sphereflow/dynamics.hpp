#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "sphereflow/fields.hpp"

namespace sphereflow {

enum class Method { Rk4Projected, EulerProjected };

struct IntegratorConfig {
    Method method = Method::Rk4Projected;
    double dt = 0.01;
    double t_end = 1.0;
    bool adaptive = false;
    double tol = 1e-8;           // step-doubling error target (adaptive)
    bool renorm_each_stage = true;
    FieldMode mode = FieldMode::General;

    void validate() const;
};

struct FlowState {
    double t = 0.0;
    ParticleEnsemble ens;
    std::vector<double> markers;  // m x d, advected by the same field
    // step diagnostics
    double last_prenorm_drift = 0.0;  // max | |x|-1 | before renormalization
    double next_dt = 0.0;             // adaptive controller's proposal
    int marker_count() const {
        return ens.d > 0 ? static_cast<int>(markers.size()) / ens.d : 0;
    }
};

// One accepted step; returns the dt actually taken (may be smaller than
// cfg.dt under adaptive control). Weights never change: the flow is a
// pushforward. Atoms and markers are renormalized after each stage.
double step_particles(FlowState& state, const KernelSpec& k, const IntegratorConfig& cfg);

struct EvolveHooks {
    // Called at t = 0, then every `cadence` accepted steps, then at t_end.
    std::function<void(const FlowState&)> observer;
    int cadence = 1;
};

void evolve(FlowState& state, const KernelSpec& k, const IntegratorConfig& cfg,
            const EvolveHooks& hooks);

// Marker trajectories for the characteristic flow: seeds are integrated under
// the evolving ensemble's field. Returns one row of positions per observer
// tick, flattened m x d, along with tick times.
struct MarkerTrack {
    std::vector<double> times;
    std::vector<std::vector<double>> positions;
};
MarkerTrack track_characteristics(FlowState state, const KernelSpec& k,
                                  const IntegratorConfig& cfg,
                                  std::vector<double> seeds, int cadence);

// ---- circle density solver ----

enum class Limiter { None, Minmod };

struct CircleSolverConfig {
    int N = 0;              // taken from the density when 0
    double cfl = 0.9;
    Limiter limiter = Limiter::None;
    double dt_override = 0.0;  // 0 = pick dt from the CFL condition

    void validate() const;
};

// One conservative finite-volume step of  d_t f + d_theta(f v) = 0  with
// upwind flux and v evaluated at cell interfaces. Returns dt taken.
double step_circle_density(CircleDensity& f, double beta, const CircleSolverConfig& cfg);

// Test hook: same update with externally supplied interface velocities
// (size N, entry k = velocity at interface k+1/2) and explicit dt.
void step_circle_density_frozen(CircleDensity& f, const std::vector<double>& v_interface,
                                double dt, Limiter limiter);

struct CircleEvolveHooks {
    std::function<void(double t, const CircleDensity&)> observer;
    int cadence = 1;
};

// Integrates to t_end, or until `stop` returns true when provided.
void evolve_circle(CircleDensity& f, double beta, const CircleSolverConfig& cfg,
                   double t_end, const CircleEvolveHooks& hooks,
                   const std::function<bool(double, const CircleDensity&)>& stop = nullptr);

}  // namespace sphereflow

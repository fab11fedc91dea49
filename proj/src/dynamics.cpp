#include "sphereflow/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "sphereflow/errors.hpp"

namespace sphereflow {

void IntegratorConfig::validate() const {
    if (!(dt > 0.0)) throw RangeError("integrator dt must be positive");
    if (adaptive && !(tol > 0.0)) throw RangeError("adaptive tolerance must be positive");
    if (!(t_end >= 0.0)) throw RangeError("t_end must be nonnegative");
}

void CircleSolverConfig::validate() const {
    if (N != 0 && N < 64) throw RangeError("circle solver needs N >= 64");
    if (!(cfl > 0.0 && cfl <= 0.9)) throw RangeError("Courant number must lie in (0, 0.9]");
}

namespace {

struct StepWorkspace {
    std::vector<double> k1, k2, k3, k4, stage;
};

void renorm_rows(std::vector<double>& pos, int d) {
    const int rows = static_cast<int>(pos.size()) / d;
    for (int i = 0; i < rows; ++i) {
        double n2 = 0.0;
        for (int t = 0; t < d; ++t) {
            const double v = pos[static_cast<std::size_t>(i) * d + t];
            n2 += v * v;
        }
        const double inv = 1.0 / std::sqrt(n2);
        for (int t = 0; t < d; ++t) pos[static_cast<std::size_t>(i) * d + t] *= inv;
    }
}

double max_norm_drift(const std::vector<double>& pos, int d) {
    const int rows = static_cast<int>(pos.size()) / d;
    double m = 0.0;
    for (int i = 0; i < rows; ++i) {
        double n2 = 0.0;
        for (int t = 0; t < d; ++t) {
            const double v = pos[static_cast<std::size_t>(i) * d + t];
            n2 += v * v;
        }
        m = std::max(m, std::abs(std::sqrt(n2) - 1.0));
    }
    return m;
}

// Field over the concatenated atom+marker rows; sources are the first n rows
// of the stage positions themselves.
void eval_field(const std::vector<double>& pos, int d, int n_atoms,
                const std::vector<double>& weights, const KernelSpec& k,
                FieldMode mode, std::vector<double>& out) {
    out.resize(pos.size());
    SourceSet nu{d,
                 {pos.data(), static_cast<std::size_t>(n_atoms) * d},
                 {weights.data(), weights.size()}};
    velocity_batch(nu, k, mode, {pos.data(), pos.size()},
                   static_cast<int>(pos.size()) / d, {out.data(), out.size()});
}

// One fixed-dt step over `pos`; returns max norm drift before the final
// renormalization.
double advance_fixed(std::vector<double>& pos, int d, int n_atoms,
                     const std::vector<double>& weights, const KernelSpec& k,
                     const IntegratorConfig& cfg, double dt, StepWorkspace& ws) {
    const std::size_t m = pos.size();
    if (cfg.method == Method::EulerProjected) {
        eval_field(pos, d, n_atoms, weights, k, cfg.mode, ws.k1);
        for (std::size_t i = 0; i < m; ++i) pos[i] += dt * ws.k1[i];
        const double drift = max_norm_drift(pos, d);
        renorm_rows(pos, d);
        return drift;
    }
    eval_field(pos, d, n_atoms, weights, k, cfg.mode, ws.k1);
    ws.stage.resize(m);
    for (std::size_t i = 0; i < m; ++i) ws.stage[i] = pos[i] + 0.5 * dt * ws.k1[i];
    if (cfg.renorm_each_stage) renorm_rows(ws.stage, d);
    eval_field(ws.stage, d, n_atoms, weights, k, cfg.mode, ws.k2);
    for (std::size_t i = 0; i < m; ++i) ws.stage[i] = pos[i] + 0.5 * dt * ws.k2[i];
    if (cfg.renorm_each_stage) renorm_rows(ws.stage, d);
    eval_field(ws.stage, d, n_atoms, weights, k, cfg.mode, ws.k3);
    for (std::size_t i = 0; i < m; ++i) ws.stage[i] = pos[i] + dt * ws.k3[i];
    if (cfg.renorm_each_stage) renorm_rows(ws.stage, d);
    eval_field(ws.stage, d, n_atoms, weights, k, cfg.mode, ws.k4);
    for (std::size_t i = 0; i < m; ++i)
        pos[i] += dt / 6.0 * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
    const double drift = max_norm_drift(pos, d);
    renorm_rows(pos, d);
    return drift;
}

}  // namespace

double step_particles(FlowState& state, const KernelSpec& k, const IntegratorConfig& cfg) {
    cfg.validate();
    const int d = state.ens.d;
    const int n = state.ens.size();
    StepWorkspace ws;
    std::vector<double> pos = state.ens.x;
    pos.insert(pos.end(), state.markers.begin(), state.markers.end());

    double taken = 0.0;
    if (!cfg.adaptive) {
        taken = std::min(cfg.dt, std::max(cfg.t_end - state.t, 0.0));
        if (taken == 0.0) taken = cfg.dt;
        state.last_prenorm_drift =
            advance_fixed(pos, d, n, state.ens.w, k, cfg, taken, ws);
    } else {
        const double dt_floor = 1e-12 * std::min(1.0, cfg.t_end > 0 ? cfg.t_end : 1.0);
        double dt = std::min(state.next_dt > 0.0 ? state.next_dt : cfg.dt,
                             std::max(cfg.t_end - state.t, 0.0));
        if (dt <= 0.0) dt = cfg.dt;
        for (;;) {
            if (dt < dt_floor)
                throw StepSizeError("adaptive step size underflowed");
            std::vector<double> full = pos;
            std::vector<double> halves = pos;
            advance_fixed(full, d, n, state.ens.w, k, cfg, dt, ws);
            advance_fixed(halves, d, n, state.ens.w, k, cfg, 0.5 * dt, ws);
            const double drift =
                advance_fixed(halves, d, n, state.ens.w, k, cfg, 0.5 * dt, ws);
            double err = 0.0;
            for (std::size_t i = 0; i < pos.size(); ++i)
                err = std::max(err, std::abs(full[i] - halves[i]));
            if (err <= cfg.tol || dt <= dt_floor * 2.0) {
                pos.swap(halves);
                taken = dt;
                state.last_prenorm_drift = drift;
                const double grow =
                    err > 0.0 ? 0.9 * std::pow(cfg.tol / err, 0.2) : 5.0;
                state.next_dt = dt * std::clamp(grow, 0.2, 5.0);
                break;
            }
            dt *= std::clamp(0.9 * std::pow(cfg.tol / err, 0.2), 0.05, 0.5);
        }
    }

    std::copy(pos.begin(), pos.begin() + static_cast<std::size_t>(n) * d,
              state.ens.x.begin());
    std::copy(pos.begin() + static_cast<std::size_t>(n) * d, pos.end(),
              state.markers.begin());
    state.t += taken;
    return taken;
}

void evolve(FlowState& state, const KernelSpec& k, const IntegratorConfig& cfg,
            const EvolveHooks& hooks) {
    cfg.validate();
    const int cadence = std::max(1, hooks.cadence);
    if (hooks.observer) hooks.observer(state);
    long steps = 0;
    // Relative slack so accumulated dt rounding cannot add a spurious step.
    while (state.t < cfg.t_end * (1.0 - 1e-12)) {
        IntegratorConfig step_cfg = cfg;
        if (!cfg.adaptive) step_cfg.dt = std::min(cfg.dt, cfg.t_end - state.t);
        step_particles(state, k, step_cfg);
        ++steps;
        if (hooks.observer && (steps % cadence == 0 || state.t >= cfg.t_end * (1.0 - 1e-12)))
            hooks.observer(state);
    }
}

MarkerTrack track_characteristics(FlowState state, const KernelSpec& k,
                                  const IntegratorConfig& cfg,
                                  std::vector<double> seeds, int cadence) {
    state.markers = std::move(seeds);
    MarkerTrack track;
    EvolveHooks hooks;
    hooks.cadence = cadence;
    hooks.observer = [&](const FlowState& s) {
        track.times.push_back(s.t);
        track.positions.push_back(s.markers);
    };
    evolve(state, k, cfg, hooks);
    return track;
}

namespace {

double minmod(double a, double b) {
    if (a > 0.0 && b > 0.0) return std::min(a, b);
    if (a < 0.0 && b < 0.0) return std::max(a, b);
    return 0.0;
}

void upwind_update(CircleDensity& f, const std::vector<double>& v, double dt,
                   Limiter limiter) {
    const int N = f.N;
    const double dtheta = f.cell_width();
    std::vector<double> flux(N, 0.0);  // flux[k] lives at interface k+1/2
    for (int k = 0; k < N; ++k) {
        const int kr = (k + 1) % N;
        double fl = f.values[k];
        double fr = f.values[kr];
        if (limiter == Limiter::Minmod) {
            const int klm = (k - 1 + N) % N;
            const int krr = (k + 2) % N;
            fl += 0.5 * minmod(f.values[k] - f.values[klm], f.values[kr] - f.values[k]);
            fr -= 0.5 * minmod(f.values[kr] - f.values[k], f.values[krr] - f.values[kr]);
        }
        flux[k] = v[k] >= 0.0 ? v[k] * fl : v[k] * fr;
    }
    for (int k = 0; k < N; ++k) {
        const int klm = (k - 1 + N) % N;
        f.values[k] -= dt / dtheta * (flux[k] - flux[klm]);
    }
}

}  // namespace

void step_circle_density_frozen(CircleDensity& f, const std::vector<double>& v_interface,
                                double dt, Limiter limiter) {
    upwind_update(f, v_interface, dt, limiter);
}

double step_circle_density(CircleDensity& f, double beta, const CircleSolverConfig& cfg) {
    cfg.validate();
    if (cfg.N != 0 && cfg.N != f.N) throw RangeError("solver N does not match density");
    const double dtheta = f.cell_width();
    const std::vector<double> v = circle_velocity_table(f, beta, /*at_interfaces=*/true);
    double vmax = 0.0;
    for (double vi : v) vmax = std::max(vmax, std::abs(vi));
    double dt = 0.0;
    if (cfg.dt_override > 0.0) {
        dt = cfg.dt_override;
        if (vmax * dt / dtheta > 1.0)
            throw CflError("explicit dt violates the CFL condition");
    } else {
        dt = vmax > 0.0 ? cfg.cfl * dtheta / vmax : dtheta;
    }
    upwind_update(f, v, dt, cfg.limiter);
    return dt;
}

void evolve_circle(CircleDensity& f, double beta, const CircleSolverConfig& cfg,
                   double t_end, const CircleEvolveHooks& hooks,
                   const std::function<bool(double, const CircleDensity&)>& stop) {
    cfg.validate();
    const int cadence = std::max(1, hooks.cadence);
    double t = 0.0;
    if (hooks.observer) hooks.observer(t, f);
    long steps = 0;
    while (t < t_end) {
        CircleSolverConfig step_cfg = cfg;
        const std::vector<double> v = circle_velocity_table(f, beta, true);
        double vmax = 0.0;
        for (double vi : v) vmax = std::max(vmax, std::abs(vi));
        double dt = cfg.dt_override > 0.0 ? cfg.dt_override
                                          : (vmax > 0.0 ? cfg.cfl * f.cell_width() / vmax
                                                        : f.cell_width());
        dt = std::min(dt, t_end - t);
        if (vmax * dt / f.cell_width() > 1.0)
            throw CflError("explicit dt violates the CFL condition");
        upwind_update(f, v, dt, cfg.limiter);
        t += dt;
        ++steps;
        if (hooks.observer && steps % cadence == 0) hooks.observer(t, f);
        if (stop && stop(t, f)) break;
    }
    if (hooks.observer && steps % cadence != 0) hooks.observer(t, f);
}

}  // namespace sphereflow

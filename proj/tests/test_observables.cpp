#include <doctest.h>

#include <cmath>

#include "sphereflow/dynamics.hpp"
#include "sphereflow/errors.hpp"
#include "sphereflow/observables.hpp"
#include "sphereflow/rng.hpp"

using namespace sphereflow;

TEST_SUITE_BEGIN("observables");

namespace {

ParticleEnsemble dirac_at(const Vec& x) {
    ParticleEnsemble e;
    e.d = static_cast<int>(x.size());
    e.x = x;
    e.w = {1.0};
    return e;
}

ParticleEnsemble two_atoms(const Vec& a, const Vec& b, double wa = 0.5) {
    ParticleEnsemble e;
    e.d = static_cast<int>(a.size());
    e.x = a;
    e.x.insert(e.x.end(), b.begin(), b.end());
    e.w = {wa, 1.0 - wa};
    return e;
}

}  // namespace

TEST_CASE("simple energy closed forms") {
    const double beta = 1.7;
    CHECK(energy_simple(dirac_at({0.0, 0.0, 1.0}), beta) ==
          doctest::Approx(std::exp(beta) / (2.0 * beta)).epsilon(1e-14));
    CHECK(energy_simple(two_atoms({1.0, 0.0, 0.0}, {-1.0, 0.0, 0.0}), beta) ==
          doctest::Approx(std::cosh(beta) / (2.0 * beta)).epsilon(1e-14));
    CHECK_THROWS_AS(energy_simple(dirac_at({1.0, 0.0}), 0.0), BetaZeroError);

    // example 2.1 has energy distinct from the dirac limit
    const double e_eps = energy_simple(make_example_2_1(0.1), 1.0);
    const double closed = 0.5 * (0.81 * std::exp(1.0) + 0.18 * std::exp(-1.0) +
                                 0.01 * std::exp(1.0));
    CHECK(e_eps == doctest::Approx(closed).epsilon(1e-14));
    CHECK(std::abs(e_eps - energy_simple_dirac(1.0)) > 1e-3);
}

TEST_CASE("general energy") {
    // Kuramoto: phi(r) = r gives E = R^2 / 2
    Rng rng(61);
    for (int it = 0; it < 50; ++it) {
        const ParticleEnsemble mu = uniform_ensemble(3, 10, rng.bits());
        const MeanOrder mo = mean_and_order(mu);
        CHECK(energy_general(mu, make_kuramoto(3)) ==
              doctest::Approx(0.5 * mo.R * mo.R).epsilon(1e-12));
    }
    // attention: the ratio against energy_simple is exactly beta
    for (double beta : {0.3, 1.0, 2.5}) {
        const ParticleEnsemble mu = uniform_ensemble(3, 12, 62);
        const double ratio =
            energy_general(mu, make_simple_attention(beta, 3)) /
            energy_simple(mu, beta);
        CHECK(ratio == doctest::Approx(beta).epsilon(1e-12));
    }
    // point mass with A = I, phi = exp
    const KernelSpec expI = make_custom(
        Matrix::identity(3), [](double s) { return std::exp(s); },
        [](double s) { return std::exp(s); }, [](double s) { return std::exp(s); });
    CHECK(energy_general(dirac_at({0.0, 1.0, 0.0}), expI) ==
          doctest::Approx(std::exp(1.0) / 2.0).epsilon(1e-14));

    const KernelSpec no_phi = make_custom(
        Matrix::identity(3), [](double) { return 1.0; }, [](double) { return 0.0; });
    CHECK_THROWS_AS(energy_general(dirac_at({0.0, 1.0, 0.0}), no_phi),
                    MissingAntiderivativeError);
}

TEST_CASE("mean and order parameter") {
    const Vec x = {0.0, 0.0, 1.0};
    const MeanOrder d0 = mean_and_order(dirac_at(x));
    CHECK(d0.R == doctest::Approx(1.0));
    CHECK(norm(sub(d0.U, x)) <= 1e-15);

    const MeanOrder mo =
        mean_and_order(two_atoms({1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}));
    CHECK(mo.R == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-14));

    const MeanOrder big = mean_and_order(uniform_ensemble(3, 40000, 63));
    CHECK(big.R <= 0.02);

    // R ~ 0: the direction flag goes down instead of erroring
    const MeanOrder anti =
        mean_and_order(two_atoms({1.0, 0.0, 0.0}, {-1.0, 0.0, 0.0}));
    CHECK(anti.R <= 1e-15);
    CHECK(!anti.u_defined);
}

TEST_CASE("dissipation and its analytic rate") {
    const KernelSpec k = make_simple_attention(1.0, 3);
    CHECK(dissipation(dirac_at({1.0, 0.0, 0.0}), k) == 0.0);
    CHECK(dissipation(two_atoms({1.0, 0.0, 0.0}, {-1.0, 0.0, 0.0}), k) == 0.0);
    CHECK(dissipation_rate(dirac_at({1.0, 0.0, 0.0}), k) == 0.0);

    // dI/dt by central differences along a 50-atom Kuramoto run
    FlowState s;
    s.ens = uniform_ensemble(3, 50, 64);
    const KernelSpec kur = make_kuramoto(3);
    IntegratorConfig cfg;
    cfg.dt = 0.002;
    cfg.t_end = 1.0;
    std::vector<double> times, ivals, qvals;
    EvolveHooks hooks;
    hooks.cadence = 1;
    hooks.observer = [&](const FlowState& st) {
        times.push_back(st.t);
        ivals.push_back(dissipation(st.ens, kur));
        qvals.push_back(dissipation_rate(st.ens, kur));
    };
    evolve(s, kur, cfg, hooks);
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < times.size(); ++i) {
        const double fd = (ivals[i + 1] - ivals[i - 1]) / (times[i + 1] - times[i - 1]);
        worst = std::max(worst, std::abs(fd - qvals[i]) /
                                    std::max(1e-6, std::abs(qvals[i])));
    }
    CHECK(worst <= 1e-3);
}

TEST_CASE("cone inequality for cap-supported Kuramoto measures") {
    Rng rng(65);
    for (int it = 0; it < 40; ++it) {
        const Vec pole = rng.sphere_point(3);
        const ParticleEnsemble mu =
            cap_uniform_ensemble(3, 16, pole, 0.15, rng.bits());  // alpha < pi/20
        const KernelSpec k = make_kuramoto(3);
        CHECK(dissipation_rate(mu, k) <= -dissipation(mu, k) + 1e-12);
    }
}

TEST_CASE("cap masses") {
    const Vec U = {0.0, 0.0, 1.0};
    const CapMasses one = cap_masses(dirac_at(U), U, 0.3);
    CHECK(one.plus == 1.0);
    CHECK(one.minus == 0.0);
    CHECK(one.equatorial == 0.0);

    const ParticleEnsemble ex = make_example_2_4(0.005);
    const Vec north = {0.0, 1.0};
    const CapMasses cm = cap_masses(ex, north, M_PI / 4.0);
    CHECK(cm.plus == doctest::Approx(1.0 / 50.0).epsilon(1e-15));
    CHECK(cm.minus == doctest::Approx(49.0 / 50.0).epsilon(1e-15));
    CHECK(cm.plus + cm.minus + cm.equatorial == 1.0);
}

TEST_CASE("xi cutoff") {
    const double a1 = 0.4, a2 = 1.1;
    CHECK(xi_cutoff(std::cos(a1) + 0.1, a1, a2) == 1.0);
    CHECK(xi_cutoff(std::cos(a2) - 0.1, a1, a2) == 0.0);
    CHECK_THROWS_AS(xi_cutoff(0.0, 1.1, 0.4), RangeError);

    // derivative bound 2/(cos a1 - cos a2), checked on a grid
    const double cap = 2.0 / (std::cos(a1) - std::cos(a2));
    double worst = 0.0;
    for (int i = 0; i <= 5000; ++i) {
        const double a = -1.0 + 2.0 * i / 5000.0;
        const double d = xi_cutoff_derivative(a, a1, a2);
        CHECK(d >= 0.0);
        worst = std::max(worst, d);
        // cross-check against finite differences of the cutoff itself
        const double h = 1e-6;
        const double fd = (xi_cutoff(a + h, a1, a2) - xi_cutoff(a - h, a1, a2)) / (2 * h);
        CHECK(std::abs(fd - d) <= 1e-5);
    }
    CHECK(worst <= cap);

    // mass through the cutoff: supported inside / outside the window
    const Vec U = {0.0, 0.0, 1.0};
    const ParticleEnsemble inside = dirac_at({0.0, 0.0, -1.0});  // -<y,U> = 1
    CHECK(xi_cutoff_mass(inside, U, a1, a2) == 1.0);
    const ParticleEnsemble outside = dirac_at({0.0, 0.0, 1.0});
    CHECK(xi_cutoff_mass(outside, U, a1, a2) == 0.0);
}

TEST_CASE("w2 to a point mass") {
    const Vec x0 = {0.0, 0.0, 1.0};
    CHECK(w2_to_dirac(dirac_at(x0), x0) == 0.0);
    CHECK(w2_to_dirac(dirac_at({0.0, 0.0, -1.0}), x0) == doctest::Approx(M_PI));
    const Vec y = {std::sin(0.8), 0.0, std::cos(0.8)};
    CHECK(w2_to_dirac(two_atoms(x0, y), x0) ==
          doctest::Approx(0.8 / std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("circular transport basics") {
    const ParticleEnsemble a = make_example_2_1(0.3);
    CHECK(w2_circle(a, a) <= 1e-12);

    auto dirac_theta = [](double th) {
        ParticleEnsemble e;
        e.d = 2;
        e.x = {std::cos(th), std::sin(th)};
        e.w = {1.0};
        return e;
    };
    Rng rng(66);
    for (int it = 0; it < 200; ++it) {
        const double t1 = 2.0 * M_PI * rng.uniform();
        const double t2 = 2.0 * M_PI * rng.uniform();
        double want = std::abs(t1 - t2);
        want = std::min(want, 2.0 * M_PI - want);
        CHECK(w2_circle(dirac_theta(t1), dirac_theta(t2)) ==
              doctest::Approx(want).epsilon(1e-10));
    }
}

TEST_CASE("circular transport satisfies the metric axioms") {
    Rng rng(67);
    auto random4 = [&]() {
        ParticleEnsemble e;
        e.d = 2;
        std::vector<double> w(4);
        double total = 0.0;
        for (int i = 0; i < 4; ++i) {
            const double th = 2.0 * M_PI * rng.uniform();
            e.x.push_back(std::cos(th));
            e.x.push_back(std::sin(th));
            total += (w[i] = 0.1 + rng.uniform());
        }
        for (double& wi : w) wi /= total;
        Kahan s;
        for (double wi : w) s.add(wi);
        w[0] += 1.0 - s.value();
        e.w = w;
        return e;
    };
    for (int it = 0; it < 60; ++it) {
        const ParticleEnsemble a = random4(), b = random4(), c = random4();
        const double ab = w2_circle(a, b), ba = w2_circle(b, a);
        CHECK(std::abs(ab - ba) <= 1e-8);
        CHECK(w2_circle(a, c) <= ab + w2_circle(b, c) + 1e-8);
        CHECK(w2_circle(a, a) <= 1e-8);
    }
}

TEST_CASE("l2 bookkeeping on the circle") {
    CircleDensity uniform;
    uniform.N = 256;
    uniform.values.assign(256, 1.0 / (2.0 * M_PI));
    uniform.validate();
    CHECK(l2_norm_sq(uniform) == doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-14));
    const Vec U = {1.0, 0.0};
    CHECK(f2_cap(uniform, U, M_PI) == doctest::Approx(l2_norm_sq(uniform)).epsilon(1e-12));

    // Gronwall monitor along a Kuramoto-kernel circle run (beta = 0 limit is
    // phi' = 1; the velocity kernel is the plain sine)
    CircleDensity f;
    f.N = 512;
    f.values.assign(512, 0.0);
    for (int k = 0; k < 512; ++k) {
        const double th = 2.0 * M_PI * k / 512;
        f.values[k] = (1.0 + 0.8 * std::cos(th)) / (2.0 * M_PI);
    }
    f.validate();
    CircleSolverConfig cfg;
    cfg.N = 512;
    std::vector<double> times, l2s, rs;
    CircleEvolveHooks hooks;
    hooks.cadence = 1;
    hooks.observer = [&](double t, const CircleDensity& g) {
        times.push_back(t);
        l2s.push_back(l2_norm_sq(g));
        rs.push_back(mean_and_order(g).R);
    };
    evolve_circle(f, 1e-9, cfg, 0.5, hooks);
    for (std::size_t i = 1; i + 1 < times.size(); ++i) {
        const double dl2 = (l2s[i + 1] - l2s[i - 1]) / (times[i + 1] - times[i - 1]);
        CHECK(dl2 <= (2 - 1) * (rs[i] + 0.0) * l2s[i] + 1e-8);
    }
}

TEST_CASE("lemma 6.2: the mean direction moves no faster than the bound") {
    FlowState s;
    s.ens = tilted_ensemble(3, 64, 0.8, 68);
    const KernelSpec k = make_exp_scaled(0.05, 3);
    const double eps = k.epsilon_phi();
    IntegratorConfig cfg;
    cfg.dt = 0.005;
    cfg.t_end = 2.0;
    std::vector<double> times;
    std::vector<Vec> us;
    std::vector<double> r2s, is;
    EvolveHooks hooks;
    hooks.cadence = 2;
    hooks.observer = [&](const FlowState& st) {
        const MeanOrder mo = mean_and_order(st.ens);
        times.push_back(st.t);
        us.push_back(mo.U);
        r2s.push_back(mo.R * mo.R);
        is.push_back(dissipation(st.ens, k));
    };
    evolve(s, k, cfg, hooks);
    for (std::size_t i = 1; i + 1 < times.size(); ++i) {
        const double dt2 = times[i + 1] - times[i - 1];
        const double du = norm(sub(us[i + 1], us[i - 1])) / dt2;
        const double dr2 = (r2s[i + 1] - r2s[i - 1]) / dt2;
        const double R = std::sqrt(r2s[i]);
        const double bound = std::sqrt(std::max(dr2, 0.0) + eps * eps) / R;
        CHECK(du <= bound + 2e-3);
        // and the direct form with I_t
        CHECK(du <= std::sqrt(is[i]) / R + 2e-3);
    }
}

TEST_CASE("time-derivative pairing of the perturbation field") {
    // |∫ <d_t W, Y> dmu| <= eps * I along the flow
    FlowState s;
    s.ens = tilted_ensemble(3, 48, 0.7, 69);
    const KernelSpec k = make_exp_scaled(0.08, 3);
    const double eps = k.epsilon_phi();
    IntegratorConfig cfg;
    cfg.dt = 0.002;
    cfg.t_end = 0.3;
    std::vector<FlowState> states;
    EvolveHooks hooks;
    hooks.cadence = 1;
    hooks.observer = [&](const FlowState& st) { states.push_back(st); };
    evolve(s, k, cfg, hooks);
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < states.size(); i += 10) {
        const ParticleEnsemble& mid = states[i].ens;
        const double dt2 = states[i + 1].t - states[i - 1].t;
        Kahan pair;
        for (int a = 0; a < mid.size(); ++a) {
            const auto x = mid.point(a);
            // W before/after at the frozen point x
            const auto [vp, wp] =
                kuramoto_part_and_perturbation(states[i + 1].ens, k, x);
            const auto [vm, wm] =
                kuramoto_part_and_perturbation(states[i - 1].ens, k, x);
            const Vec y = velocity_general(sources(mid), k, x);
            double inner = 0.0;
            for (int t = 0; t < 3; ++t)
                inner += (wp[t] - wm[t]) / dt2 * y[t];
            pair.add(mid.w[a] * inner);
        }
        const double I = dissipation(mid, k);
        worst = std::max(worst, std::abs(pair.value()) - eps * I);
    }
    CHECK(worst <= 1e-3);
}

TEST_CASE("snapshots and serialization order") {
    TrajectoryRecord rec;
    ObservableSnapshot s1;
    s1.t = 0.0;
    s1.R = 0.5;
    s1.M = {0.5, 0.0};
    s1.U = {1.0, 0.0};
    s1.I = 0.25;
    s1.E = 1.5;
    ObservableSnapshot s2 = s1;
    s2.t = 1.0;
    rec.snapshots = {s1, s2};
    rec.validate_times();
    const std::string csv = trajectory_to_csv(rec, 2);
    CHECK(csv.find("t,E,R,U0,U1,I,cap_plus,cap_minus,xi_mass,W2,l2,f2cap") !=
          std::string::npos);
    rec.snapshots[1].t = 0.0;
    CHECK_THROWS_AS(rec.validate_times(), RangeError);
}

TEST_SUITE_END();

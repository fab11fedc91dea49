#include <algorithm>
#include <cmath>
#include <functional>

#include "sphereflow/errors.hpp"
#include "sphereflow/rng.hpp"
#include "sphereflow/run.hpp"

namespace sphereflow::run {

namespace {

struct Suite {
    Report report;
    void add(const std::string& name, bool pass, const std::string& detail) {
        report.lines.push_back({name, pass, detail});
    }
    // worst-case style helper: pass iff observed <= bound
    void bound(const std::string& name, double observed, double limit) {
        add(name, observed <= limit,
            "max " + format_double(observed) + " vs " + format_double(limit));
    }
};

ParticleEnsemble random_ensemble(Rng& rng, int d, int n) {
    std::vector<double> x(static_cast<std::size_t>(n) * d);
    std::vector<double> w(n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const Vec p = rng.sphere_point(d);
        std::copy(p.begin(), p.end(), x.begin() + static_cast<std::size_t>(i) * d);
        w[i] = 0.1 + rng.uniform();
        total += w[i];
    }
    for (double& wi : w) wi /= total;
    // nudge so the weights sum to 1 within the type tolerance
    Kahan s;
    for (double wi : w) s.add(wi);
    w[0] += 1.0 - s.value();
    return make_ensemble(d, std::move(x), std::move(w));
}

KernelSpec random_kernel(Rng& rng, int d) {
    switch (rng.bits() % 3) {
        case 0: return make_kuramoto(d);
        case 1: return make_simple_attention(0.2 + 2.0 * rng.uniform(), d);
        default: return make_exp_scaled(0.01 + 0.2 * rng.uniform(), d);
    }
}

// ---- geometry ----

void check_geometry(Suite& s, std::uint64_t seed) {
    Rng rng(seed);
    double worst = 0.0;
    for (int it = 0; it < 20000; ++it) {
        const int d = 2 + static_cast<int>(rng.bits() % 7);
        const Vec x = rng.sphere_point(d);
        Vec y(d);
        for (double& v : y) v = rng.normal();
        worst = std::max(worst, std::abs(dot(project_tangent(x, y), x)));
    }
    s.bound("tangent_projection_orthogonal", worst, 1e-14);

    double worst_self = 0.0;
    {
        Rng r2(seed + 1);
        for (int it = 0; it < 1000; ++it) {
            const Vec x = r2.sphere_point(3);
            worst_self = std::max(worst_self, norm(project_tangent(x, x)));
        }
    }
    s.bound("tangent_projection_self", worst_self, 1e-15);

    Rng r3(seed + 2);
    double rt = 0.0, ip = 0.0, nm = 0.0, lin = 0.0;
    for (int it = 0; it < 100000; ++it) {
        const int d = 2 + static_cast<int>(r3.bits() % 4);
        const GnomonicChart chart(r3.sphere_point(d));
        Vec u(d - 1), v(d - 1);
        for (double& c : u) c = 0.8 * r3.normal();
        for (double& c : v) c = 0.8 * r3.normal();
        const Vec fu = chart.inverse(u);
        nm = std::max(nm, std::abs(norm(fu) - 1.0));
        rt = std::max(rt, norm(sub(chart.forward(fu), u)));
        const Vec fv = chart.inverse(v);
        const double lhs = dot(fu, fv);
        const double rhs = (dot(u, v) + 1.0) /
                           (std::sqrt(1.0 + norm2(u)) * std::sqrt(1.0 + norm2(v)));
        ip = std::max(ip, std::abs(lhs - rhs));
        // norm identity for the tangent map
        Vec X(d - 1);
        for (double& c : X) c = r3.normal();
        const Vec dfu = chart.tangent_map(u, X);
        const double u2 = norm2(u);
        const double want = norm2(X) / (1.0 + u2) -
                            dot(X, u) * dot(X, u) / ((1.0 + u2) * (1.0 + u2));
        nm = std::max(nm, std::abs(norm2(dfu) - want));
        // linearity of the projected chord
        const Vec proj = project_tangent(fu, fv);
        Vec rhsv = chart.tangent_map(u, sub(v, u));
        const double scale = std::sqrt((1.0 + norm2(u)) / (1.0 + norm2(v)));
        for (double& c : rhsv) c *= scale;
        lin = std::max(lin, norm(sub(proj, rhsv)));
    }
    s.bound("gnomonic_roundtrip", rt, 1e-12);
    s.bound("gnomonic_inner_product_identity", ip, 1e-12);
    s.bound("gnomonic_norm_identity", nm, 1e-10);
    s.bound("gnomonic_linearity_identity", lin, 1e-10);

    Rng r4(seed + 3);
    double tri = 0.0;
    bool sym = true;
    for (int it = 0; it < 5000; ++it) {
        const int d = 2 + static_cast<int>(r4.bits() % 4);
        const Vec a = r4.sphere_point(d), b = r4.sphere_point(d), c = r4.sphere_point(d);
        sym = sym && geodesic_distance(a, b) == geodesic_distance(b, a);
        tri = std::max(tri, geodesic_distance(a, c) - geodesic_distance(a, b) -
                                geodesic_distance(b, c));
    }
    s.add("geodesic_symmetry_exact", sym, sym ? "ok" : "asymmetry found");
    s.bound("geodesic_triangle_inequality", tri, 1e-12);

    // closed caps: the boundary point counts as inside
    SphericalCap cap{{0.0, 0.0, 1.0}, 0.5};
    const Vec boundary = {std::sin(0.5), 0.0, std::cos(0.5)};
    s.add("cap_boundary_closed", cap.contains(boundary), "cos(angle) boundary");
}

// ---- fields ----

void check_fields(Suite& s, std::uint64_t seed) {
    Rng rng(seed);
    double tang = 0.0, bound = -1.0, wbound = 0.0;
    for (int it = 0; it < 10000; ++it) {
        const int d = 2 + static_cast<int>(rng.bits() % 3);
        const ParticleEnsemble mu = random_ensemble(rng, d, 2 + static_cast<int>(rng.bits() % 6));
        const KernelSpec k = random_kernel(rng, d);
        const Vec at = rng.sphere_point(d);
        const Vec y = velocity_general(sources(mu), k, at);
        tang = std::max(tang, std::abs(dot(y, at)));
        const double eps = k.epsilon_phi();
        bound = std::max(bound, norm(y) - (1.0 + eps));
        const auto [v, w] = kuramoto_part_and_perturbation(mu, k, at);
        wbound = std::max(wbound, norm(w) - eps);
        Vec resum = add(v, w);
        tang = std::max(tang, norm(sub(resum, y)));
    }
    s.bound("field_tangency", tang, 1e-12);
    s.bound("field_norm_bound", bound, 0.0);
    s.bound("kuramoto_perturbation_bound", wbound, 1e-12);

    // Kuramoto field is the projected mean
    Rng r2(seed + 1);
    double kur = 0.0;
    for (int it = 0; it < 200; ++it) {
        const ParticleEnsemble mu = random_ensemble(r2, 3, 8);
        const KernelSpec k = make_kuramoto(3);
        const Vec at = r2.sphere_point(3);
        const MeanOrder mo = mean_and_order(mu);
        kur = std::max(kur, norm(sub(velocity_general(sources(mu), k, at),
                                     project_tangent(at, mo.M))));
    }
    s.bound("kuramoto_is_projected_mean", kur, 1e-14);

    // A = beta I: gradient field = beta * simple field
    Rng r3(seed + 2);
    double prop = 0.0;
    for (int it = 0; it < 200; ++it) {
        const double beta = 0.2 + 2.0 * r3.uniform();
        const ParticleEnsemble mu = random_ensemble(r3, 3, 8);
        const KernelSpec k = make_simple_attention(beta, 3);
        const Vec at = r3.sphere_point(3);
        const Vec grad = velocity_gradient(sources(mu), k, at);
        Vec simple = velocity_general(sources(mu), k, at);
        for (double& c : simple) c *= beta;
        prop = std::max(prop, norm(sub(grad, simple)));
    }
    s.bound("gradient_is_beta_times_simple", prop, 1e-12);

    // rotation equivariance for A = beta I
    Rng r4(seed + 3);
    double equiv = 0.0;
    for (int it = 0; it < 100; ++it) {
        const ParticleEnsemble mu = random_ensemble(r4, 3, 6);
        const KernelSpec k = make_simple_attention(1.0, 3);
        const Vec at = r4.sphere_point(3);
        // a Householder reflection is an orthogonal map commuting with beta*I
        const Vec h = r4.sphere_point(3);
        auto reflect = [&](std::span<const double> p) {
            Vec q(p.begin(), p.end());
            const double c = 2.0 * dot(h, p);
            for (int t = 0; t < 3; ++t) q[t] = c * h[t] - q[t];
            return q;
        };
        ParticleEnsemble rot = mu;
        for (int i = 0; i < mu.size(); ++i) {
            const Vec q = reflect(mu.point(i));
            std::copy(q.begin(), q.end(), rot.x.begin() + static_cast<std::size_t>(i) * 3);
        }
        const Vec lhs = velocity_general(sources(rot), k, reflect(at));
        const Vec rhs = reflect(velocity_general(sources(mu), k, at));
        equiv = std::max(equiv, norm(sub(lhs, rhs)));
    }
    s.bound("rotation_equivariance", equiv, 1e-12);

    // parallel batch matches the serial reference bit for bit
    Rng r5(seed + 4);
    bool batch_same = true;
    for (int it = 0; it < 20; ++it) {
        const int d = 2 + static_cast<int>(r5.bits() % 3);
        const ParticleEnsemble mu = random_ensemble(r5, d, 64);
        const KernelSpec k = random_kernel(r5, d);
        std::vector<double> a(mu.x.size()), b(mu.x.size());
        velocity_batch(sources(mu), k, FieldMode::General, {mu.x.data(), mu.x.size()},
                       mu.size(), {a.data(), a.size()});
        velocity_batch_serial(sources(mu), k, FieldMode::General,
                              {mu.x.data(), mu.x.size()}, mu.size(),
                              {b.data(), b.size()});
        batch_same = batch_same && a == b;
    }
    s.add("parallel_batch_bitwise_equal", batch_same,
          batch_same ? "ok" : "parallel and serial outputs differ");

    // vanishing integral of the pulled-back field
    Rng r6(seed + 5);
    double vanish = 0.0;
    for (int it = 0; it < 100; ++it) {
        const int d = 3;
        Vec pole(d, 0.0);
        pole[d - 1] = 1.0;
        const ParticleEnsemble mu = cap_uniform_ensemble(d, 24, pole, 0.6, r6.bits());
        const KernelSpec k = random_kernel(r6, d);
        const GnomonicChart chart(pole);
        std::vector<Kahan> acc(d - 1);
        for (int i = 0; i < mu.size(); ++i) {
            const Vec u = chart.forward(mu.point(i));
            const Vec X = gnomonic_pullback_field(chart, sources(mu), k, u);
            for (int t = 0; t < d - 1; ++t)
                acc[t].add(mu.w[i] * X[t] / (1.0 + norm2(u)));
        }
        for (int t = 0; t < d - 1; ++t) vanish = std::max(vanish, std::abs(acc[t].value()));
    }
    s.bound("gnomonic_vanishing_integral", vanish, 1e-10);
}

// ---- variations ----

// closed-form tangent test fields with exact covariant derivatives
struct TestField {
    Vec c;       // constant part
    Matrix B;    // linear part
    Vec value(std::span<const double> x) const {
        Vec raw = B.apply(x);
        for (std::size_t t = 0; t < raw.size(); ++t) raw[t] += c[t];
        return project_tangent(x, raw);
    }
    // nabla_V V at x for V(x) = P_x[c + Bx]
    Vec cov(std::span<const double> x) const {
        const Vec v = value(x);
        const Vec raw = [&] {
            Vec r = B.apply(x);
            for (std::size_t t = 0; t < r.size(); ++t) r[t] += c[t];
            return r;
        }();
        // D_v raw = B v; D_v (<x,raw> x) = (<v,raw> + <x,Bv>) x + <x,raw> v
        Vec bv = B.apply(v);
        Vec amb(x.size());
        const double xraw = dot(x, raw);
        for (std::size_t t = 0; t < amb.size(); ++t)
            amb[t] = bv[t] - xraw * v[t];
        // there is also -(<v,raw> + <x,Bv>) x, removed by the projection below
        return project_tangent(x, amb);
    }
};

TestField random_field(Rng& rng, int d) {
    TestField f;
    f.c.resize(d);
    for (double& v : f.c) v = rng.normal();
    f.B = Matrix(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) f.B(i, j) = 0.5 * rng.normal();
    return f;
}

double energy_of(const ParticleEnsemble& mu, const KernelSpec& k) {
    return energy_general(mu, k);
}

ParticleEnsemble flow_pushforward(const ParticleEnsemble& mu, const TestField& f,
                                  double h) {
    // integrate dx/dt = V(x) exactly enough with small RK4 substeps
    ParticleEnsemble out = mu;
    const int steps = 64;
    const double dt = h / steps;
    for (int i = 0; i < out.size(); ++i) {
        Vec x(out.point(i).begin(), out.point(i).end());
        for (int st = 0; st < steps; ++st) {
            const Vec k1 = f.value(x);
            Vec x2 = x;
            axpy(0.5 * dt, k1, x2);
            normalize_in_place(x2);
            const Vec k2 = f.value(x2);
            Vec x3 = x;
            axpy(0.5 * dt, k2, x3);
            normalize_in_place(x3);
            const Vec k3 = f.value(x3);
            Vec x4 = x;
            axpy(dt, k3, x4);
            normalize_in_place(x4);
            const Vec k4 = f.value(x4);
            for (std::size_t t = 0; t < x.size(); ++t)
                x[t] += dt / 6.0 * (k1[t] + 2.0 * k2[t] + 2.0 * k3[t] + k4[t]);
            normalize_in_place(x);
        }
        std::copy(x.begin(), x.end(), out.x.begin() + static_cast<std::size_t>(i) * out.d);
    }
    return out;
}

void check_variations(Suite& s, std::uint64_t seed) {
    Rng rng(seed);
    double fv_err = 0.0, sv_err = 0.0, decomp_err = 0.0;
    for (int it = 0; it < 5; ++it) {
        const int d = it % 2 == 0 ? 3 : 4;
        const ParticleEnsemble mu = random_ensemble(rng, d, 12);
        KernelSpec k = it % 3 == 0 ? make_kuramoto(d) : make_simple_attention(0.7, d);
        const TestField f = random_field(rng, d);
        std::vector<double> V(mu.x.size()), dtV(mu.x.size(), 0.0), covV(mu.x.size());
        for (int i = 0; i < mu.size(); ++i) {
            const Vec v = f.value(mu.point(i));
            const Vec cv = f.cov(mu.point(i));
            std::copy(v.begin(), v.end(), V.begin() + static_cast<std::size_t>(i) * d);
            std::copy(cv.begin(), cv.end(), covV.begin() + static_cast<std::size_t>(i) * d);
        }
        // first variation against the plain retraction pushforward
        const double analytic = first_variation(mu, k, V);
        const double h = 1e-4;
        ParticleEnsemble plus = mu, minus = mu;
        for (int i = 0; i < mu.size(); ++i) {
            Vec xp(mu.point(i).begin(), mu.point(i).end());
            Vec xm = xp;
            axpy(h, {V.data() + static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d)}, xp);
            axpy(-h, {V.data() + static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d)}, xm);
            normalize_in_place(xp);
            normalize_in_place(xm);
            std::copy(xp.begin(), xp.end(), plus.x.begin() + static_cast<std::size_t>(i) * d);
            std::copy(xm.begin(), xm.end(), minus.x.begin() + static_cast<std::size_t>(i) * d);
        }
        const double fd = (energy_of(plus, k) - energy_of(minus, k)) / (2.0 * h);
        fv_err = std::max(fv_err, std::abs(analytic - fd) /
                                      std::max({1e-10, std::abs(analytic), std::abs(fd)}));

        // full second variation against Richardson differences along the flow
        const VariationReport rep = second_variation_full(mu, k, V, dtV, covV);
        auto second_diff = [&](double hh) {
            const double ep = energy_of(flow_pushforward(mu, f, hh), k);
            const double em = energy_of(flow_pushforward(mu, f, -hh), k);
            return (ep - 2.0 * energy_of(mu, k) + em) / (hh * hh);
        };
        const double dh = 1e-3;
        const double d1 = second_diff(dh);
        const double d2 = second_diff(dh / 2.0);
        const double rich = (4.0 * d2 - d1) / 3.0;
        sv_err = std::max(sv_err, std::abs(rep.second_variation - rich) /
                                      std::max({1e-8, std::abs(rich),
                                                std::abs(rep.second_variation)}));
        decomp_err = std::max(
            decomp_err,
            std::abs(rep.parts[0] + rep.parts[1] + rep.parts[2] + rep.parts[3] -
                     rep.second_variation));
    }
    s.bound("first_variation_vs_fd", fv_err, 1e-5);
    s.bound("second_variation_vs_fd", sv_err, 1e-4);
    s.bound("second_variation_decomposition", decomp_err, 1e-10);

    // the antipodal pair: closed form beta e^{-beta} along w = e2
    {
        std::vector<double> coords = {1, 0, 0, -1, 0, 0};
        const ParticleEnsemble mu = make_ensemble(3, coords, {0.5, 0.5});
        const double beta = 1.3;
        const KernelSpec k = make_simple_attention(beta, 3);
        const Vec w = {0.0, 1.0, 0.0};
        const VariationReport rep = second_variation_at_critical(mu, k, w);
        const double want = beta * std::exp(-beta);
        s.bound("antipodal_escape_value",
                std::abs(rep.second_variation - want), 1e-10);
    }

    // the first variation vanishes at critical points
    {
        Rng r2(seed + 9);
        std::vector<double> coords = {1, 0, 0, -1, 0, 0};
        const ParticleEnsemble mu = make_ensemble(3, coords, {0.5, 0.5});
        const KernelSpec k = make_simple_attention(0.9, 3);
        double worst = 0.0;
        for (int it = 0; it < 20; ++it) {
            const TestField f = random_field(r2, 3);
            std::vector<double> V(mu.x.size());
            for (int i = 0; i < mu.size(); ++i) {
                const Vec v = f.value(mu.point(i));
                std::copy(v.begin(), v.end(), V.begin() + static_cast<std::size_t>(i) * 3);
            }
            worst = std::max(worst, std::abs(first_variation(mu, k, V)));
        }
        s.bound("critical_first_variation_vanishes", worst, 1e-10);
    }
}

// ---- inequalities ----

void check_inequalities(Suite& s, std::uint64_t seed) {
    // PL sweep in regime
    {
        Rng rng(seed);
        int violations = 0;
        for (int it = 0; it < 300; ++it) {
            const double beta = std::vector<double>{0.1, 1.0, 5.0}[it % 3];
            const double alpha = std::atan(1.0 / (20.0 * (1.0 + std::sqrt(beta))));
            const int d = std::vector<int>{2, 3, 5}[static_cast<int>(rng.bits() % 3)];
            const Vec u = rng.sphere_point(d);
            const ParticleEnsemble mu =
                cap_uniform_ensemble(d, 2 + static_cast<int>(rng.bits() % 31), u, alpha,
                                     rng.bits());
            const InequalityVerdict v = pl_inequality_check(mu, beta, u, alpha);
            if (!v.holds || !v.regime_ok) ++violations;
        }
        s.add("pl_sweep_in_regime", violations == 0,
              std::to_string(violations) + " violations of 300");
    }

    // pointwise eigenvalue inequality
    {
        Rng rng(seed + 1);
        double worst = 1.0;
        for (int it = 0; it < 10000; ++it) {
            const int d = 3 + static_cast<int>(rng.bits() % 5);
            const double l = 0.2 + 2.0 * rng.uniform();
            Vec lambdas(d, l);
            for (int i = 3; i < d; ++i) lambdas[i] = l * (2.0 * rng.uniform() - 1.0);
            const Vec x = rng.sphere_point(d), y = rng.sphere_point(d);
            worst = std::min(worst, pointwise_eigen_inequality(x, y, lambdas));
        }
        s.add("pointwise_inequality_sweep", worst >= -1e-10,
              "min " + format_double(worst));
    }

    // cone inequality (sub-probability restrictions allowed) and homogeneity
    {
        Rng rng(seed + 2);
        double worst = 0.0, hom = 0.0;
        for (int it = 0; it < 60; ++it) {
            const int d = 3;
            Vec pole = rng.sphere_point(d);
            const ParticleEnsemble mu =
                cap_uniform_ensemble(d, 12, pole, 0.14, rng.bits());
            const KernelSpec k =
                it % 2 == 0 ? make_kuramoto(d)
                            : make_exp_scaled(exp_scaled_rate_for_epsilon(0.009), d);
            // scale to a positive measure of total mass in (0, 1]
            std::vector<double> w = mu.w;
            const double mass = 0.3 + 0.7 * rng.uniform();
            for (double& wi : w) wi *= mass;
            SourceSet nu{d, {mu.x.data(), mu.x.size()}, {w.data(), w.size()}};
            const double lhs = q_double_sum(nu, k);
            const double rhs = -mass * dissipation_unnormalized(nu, k);
            worst = std::max(worst, lhs - rhs);
            // degree-4 homogeneity under weight scaling
            std::vector<double> w2 = w;
            for (double& wi : w2) wi *= 2.0;
            SourceSet nu2{d, {mu.x.data(), mu.x.size()}, {w2.data(), w2.size()}};
            hom = std::max(hom, std::abs(q_double_sum(nu2, k) - 16.0 * lhs) /
                                    std::max(1e-12, std::abs(16.0 * lhs)));
        }
        s.bound("cone_inequality_cap", worst, 1e-12);
        s.bound("cone_homogeneity_degree4", hom, 1e-10);
    }

    // perturbation sandwich along a flow
    {
        Rng rng(seed + 3);
        const KernelSpec k = make_exp_scaled(exp_scaled_rate_for_epsilon(0.05), 3);
        const double eps = k.epsilon_phi();
        FlowState state;
        state.ens = tilted_ensemble(3, 48, 0.8, rng.bits());
        IntegratorConfig icfg;
        icfg.dt = 0.01;
        icfg.t_end = 4.0;
        TrajectoryRecord rec;
        SnapshotRequest req;
        req.with_energy = false;
        EvolveHooks hooks;
        hooks.cadence = 2;
        hooks.observer = [&](const FlowState& st) {
            rec.snapshots.push_back(take_snapshot(st.t, st.ens, k, req));
        };
        evolve(state, k, icfg, hooks);
        std::vector<InequalityVerdict> verdicts;
        append_sandwich_verdicts(rec, eps, verdicts);
        int bad = 0;
        for (const auto& v : verdicts)
            if (!v.holds) ++bad;
        s.add("lemma52_53_sandwich", bad == 0,
              std::to_string(bad) + " of " + std::to_string(verdicts.size()));
    }

    // entropy production along a Kuramoto flow from a hemisphere start
    {
        Rng rng(seed + 4);
        const KernelSpec k = make_kuramoto(3);
        Vec pole = {0.0, 0.0, 1.0};
        FlowState state;
        state.ens = cap_uniform_ensemble(3, 100, pole, 1.2, rng.bits());
        IntegratorConfig icfg;
        icfg.dt = 0.02;
        icfg.t_end = 6.0;
        TrajectoryRecord rec;
        SnapshotRequest req;
        req.with_energy = false;
        req.with_q_rate = true;
        req.cap_alpha = M_PI / 25.0;
        EvolveHooks hooks;
        hooks.cadence = 5;
        hooks.observer = [&](const FlowState& st) {
            rec.snapshots.push_back(take_snapshot(st.t, st.ens, k, req));
        };
        evolve(state, k, icfg, hooks);
        const auto verdicts = entropy_production_check(rec, k, M_PI / 25.0);
        int bad = 0;
        for (const auto& v : verdicts)
            if (!v.holds) ++bad;
        s.add("entropy_production_monitor", bad == 0,
              std::to_string(bad) + " of " + std::to_string(verdicts.size()));
    }

    // explicit constants
    {
        const SynchronizationConstants c = theorem39_constants(1.0, 2, 1.0);
        s.bound("thm39_reference_value", std::abs(c.T0 - 8e41) / 8e41, 1e-12);
        bool monotone = true;
        double prev = std::numeric_limits<double>::infinity();
        for (double r0 = 0.1; r0 <= 1.0001; r0 += 0.1) {
            const double t0 = theorem39_constants(r0, 3, 2.0).T0;
            monotone = monotone && t0 < prev;
            prev = t0;
        }
        s.add("thm39_monotone_in_R0", monotone, monotone ? "ok" : "not monotone");
    }

    // hemisphere criticality: no false criticals over random cap ensembles
    {
        Rng rng(seed + 5);
        bool consistent = true;
        double min_pos = std::numeric_limits<double>::infinity();
        for (int it = 0; it < 300; ++it) {
            Vec pole = rng.sphere_point(3);
            const ParticleEnsemble mu =
                cap_uniform_ensemble(3, 2 + static_cast<int>(rng.bits() % 15), pole, 0.5,
                                     rng.bits());
            const KernelSpec k = random_kernel(rng, 3);
            const auto rep = hemisphere_critical_test(mu, k, pole, 0.5);
            consistent = consistent && rep.consistent;
            if (!rep.is_dirac && rep.I > 0.0) min_pos = std::min(min_pos, rep.I);
        }
        s.add("hemisphere_no_false_criticals", consistent,
              "min positive I " + format_double(min_pos));
    }
}

}  // namespace

Report run_check_suite(const std::string& suite, std::uint64_t seed) {
    Suite s;
    s.report.title = "check:" + suite;
    if (suite == "geometry" || suite == "all") check_geometry(s, seed);
    if (suite == "fields" || suite == "all") check_fields(s, seed + 1000);
    if (suite == "variations" || suite == "all") check_variations(s, seed + 2000);
    if (suite == "inequalities" || suite == "all") check_inequalities(s, seed + 3000);
    if (s.report.lines.empty())
        throw ConfigError("unknown check suite '" + suite +
                          "' (geometry|fields|variations|inequalities|all)");
    return s.report;
}

}  // namespace sphereflow::run

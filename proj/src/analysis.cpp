#include "sphereflow/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "sphereflow/errors.hpp"

namespace sphereflow {

InequalityVerdict make_verdict(std::string name, double t, double lhs, double rhs,
                               double tol, bool regime_ok) {
    InequalityVerdict v;
    v.name = std::move(name);
    v.t = t;
    v.lhs = lhs;
    v.rhs = rhs;
    v.slack = rhs - lhs;
    v.holds = lhs <= rhs + tol;
    v.regime_ok = regime_ok;
    return v;
}

std::string verdicts_to_jsonl(const std::vector<InequalityVerdict>& verdicts) {
    std::ostringstream out;
    for (const auto& v : verdicts) {
        nlohmann::json j;
        j["name"] = v.name;
        j["t"] = v.t;
        j["lhs"] = v.lhs;
        j["rhs"] = v.rhs;
        j["holds"] = v.holds;
        j["slack"] = v.slack;
        j["regime_ok"] = v.regime_ok;
        out << j.dump() << '\n';
    }
    return out.str();
}

namespace {

std::span<const double> row(const std::vector<double>& flat, int i, int d) {
    return {flat.data() + static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d)};
}

Vec apply_A(const KernelSpec& k, std::span<const double> x) {
    if (k.a_scalar) return scaled(x, k.a_scale);
    return k.A.apply(x);
}

void check_tangent(const ParticleEnsemble& mu, const std::vector<double>& V) {
    if (V.size() != mu.x.size())
        throw RangeError("field sample count does not match the ensemble");
    for (int i = 0; i < mu.size(); ++i) {
        const auto vi = row(V, i, mu.d);
        if (std::abs(dot(mu.point(i), vi)) > 1e-10 * (1.0 + norm(vi)))
            throw NonTangentError("field is not tangent at an atom");
    }
}

}  // namespace

double first_variation(const ParticleEnsemble& mu, const KernelSpec& k,
                       const std::vector<double>& V) {
    check_tangent(mu, V);
    const int n = mu.size();
    const int d = mu.d;
    std::vector<double> partial(n, 0.0);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const auto xi = mu.point(i);
        const Vec axi = apply_A(k, xi);
        const auto vi = row(V, i, d);
        Kahan s;
        for (int j = 0; j < n; ++j) {
            const auto xj = mu.point(j);
            const double c = dot(axi, xj);
            const Vec axj = apply_A(k, xj);
            s.add(mu.w[j] * k.phi_prime(c) * dot(axj, vi));
        }
        partial[i] = mu.w[i] * s.value();
    }
    Kahan total;
    for (double p : partial) total.add(p);
    return total.value();
}

VariationReport second_variation_full(const ParticleEnsemble& mu, const KernelSpec& k,
                                      const std::vector<double>& V,
                                      const std::vector<double>& dtV,
                                      const std::vector<double>& covV) {
    check_tangent(mu, V);
    const int n = mu.size();
    const int d = mu.d;
    std::vector<double> p1(n, 0.0), p2(n, 0.0), p3(n, 0.0), p4(n, 0.0);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const auto xi = mu.point(i);
        const Vec axi = apply_A(k, xi);
        const auto vi = row(V, i, d);
        Kahan s1, s2, s3, s4;
        for (int j = 0; j < n; ++j) {
            const auto xj = mu.point(j);
            const Vec axj = apply_A(k, xj);
            const auto vj = row(V, j, d);
            const double c = dot(axi, xj);
            const double pp = k.phi_double_prime(c);
            const double p = k.phi_prime(c);
            const double cross = dot(axj, vi) + dot(axi, vj);
            s1.add(mu.w[j] * 0.5 * pp * cross * cross);
            const Vec avi = apply_A(k, vi);
            s2.add(mu.w[j] * p * dot(avi, vj));
            s3.add(mu.w[j] * -0.5 * p * c * (norm2(vi) + norm2(vj)));
            Vec transport = add(row(dtV, i, d), row(covV, i, d));
            s4.add(mu.w[j] * p * dot(axj, transport));
        }
        p1[i] = mu.w[i] * s1.value();
        p2[i] = mu.w[i] * s2.value();
        p3[i] = mu.w[i] * s3.value();
        p4[i] = mu.w[i] * s4.value();
    }
    VariationReport rep;
    Kahan t1, t2, t3, t4;
    for (int i = 0; i < n; ++i) {
        t1.add(p1[i]);
        t2.add(p2[i]);
        t3.add(p3[i]);
        t4.add(p4[i]);
    }
    rep.parts[0] = t1.value();
    rep.parts[1] = t2.value();
    rep.parts[2] = t3.value();
    rep.parts[3] = t4.value();
    rep.first_variation = first_variation(mu, k, V);
    rep.second_variation = rep.parts[0] + rep.parts[1] + rep.parts[2] + rep.parts[3];
    return rep;
}

double max_atom_speed(const ParticleEnsemble& mu, const KernelSpec& k, FieldMode mode) {
    const int n = mu.size();
    const int d = mu.d;
    std::vector<double> y(static_cast<std::size_t>(n) * d, 0.0);
    velocity_batch(sources(mu), k, mode, {mu.x.data(), mu.x.size()}, n,
                   {y.data(), y.size()});
    double m = 0.0;
    for (int i = 0; i < n; ++i) m = std::max(m, norm(row(y, i, d)));
    return m;
}

VariationReport second_variation_at_critical(const ParticleEnsemble& mu,
                                             const KernelSpec& k,
                                             std::span<const double> w) {
    if (max_atom_speed(mu, k, FieldMode::Gradient) > 1e-8)
        throw NotCriticalError("measure is not critical for the gradient flow");
    const int n = mu.size();
    const int d = mu.d;
    // X0(x) = P_x[w] at every atom
    std::vector<double> X0(static_cast<std::size_t>(n) * d);
    for (int i = 0; i < n; ++i) {
        const Vec p = project_tangent(mu.point(i), w);
        std::copy(p.begin(), p.end(), X0.begin() + static_cast<std::size_t>(i) * d);
    }
    std::vector<double> p1(n, 0.0), p2(n, 0.0), p3(n, 0.0), combined(n, 0.0);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const auto xi = mu.point(i);
        const Vec axi = apply_A(k, xi);
        const auto vi = row(X0, i, d);
        const Vec avi = apply_A(k, vi);
        Kahan s1, s2, s3, sc;
        for (int j = 0; j < n; ++j) {
            const auto xj = mu.point(j);
            const Vec axj = apply_A(k, xj);
            const auto vj = row(X0, j, d);
            const double c = dot(axi, xj);
            const double cross = dot(axj, vi) + dot(axi, vj);
            s1.add(mu.w[j] * 0.5 * k.phi_double_prime(c) * cross * cross);
            const double t2v = dot(avi, vj);
            const double t3v = -0.5 * c * (norm2(vi) + norm2(vj));
            s2.add(mu.w[j] * k.phi_prime(c) * t2v);
            s3.add(mu.w[j] * k.phi_prime(c) * t3v);
            sc.add(mu.w[j] * (0.5 * k.phi_double_prime(c) * cross * cross +
                              k.phi_prime(c) * (t2v + t3v)));
        }
        p1[i] = mu.w[i] * s1.value();
        p2[i] = mu.w[i] * s2.value();
        p3[i] = mu.w[i] * s3.value();
        combined[i] = mu.w[i] * sc.value();
    }
    VariationReport rep;
    Kahan t1, t2, t3, tc;
    for (int i = 0; i < n; ++i) {
        t1.add(p1[i]);
        t2.add(p2[i]);
        t3.add(p3[i]);
        tc.add(combined[i]);
    }
    rep.parts[0] = t1.value();
    rep.parts[1] = t2.value();
    rep.parts[2] = t3.value();
    rep.parts[3] = 0.0;  // transport term vanishes at critical points
    rep.second_variation = tc.value();
    rep.first_variation = 0.0;
    return rep;
}

double pointwise_eigen_inequality(std::span<const double> x, std::span<const double> y,
                                  std::span<const double> lambdas) {
    const int d = static_cast<int>(lambdas.size());
    if (d < 3) throw DimensionError("needs d >= 3");
    const double l = lambdas[0];
    if (!(l > 0.0) || std::abs(lambdas[1] - l) > 1e-10 * std::max(1.0, l) ||
        std::abs(lambdas[2] - l) > 1e-10 * std::max(1.0, l))
        throw HypothesisError("top three eigenvalues must coincide and be positive");
    for (int i = 3; i < d; ++i)
        if (std::abs(lambdas[i]) > l * (1.0 + 1e-12))
            throw HypothesisError("|lambda_i| <= lambda fails");
    double axy = 0.0;
    for (int i = 0; i < d; ++i) axy += lambdas[i] * x[i] * y[i];
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
        s += 2.0 * lambdas[i] * (1.0 - x[i] * x[i] - y[i] * y[i]) -
             axy * (2.0 - x[i] * x[i] - y[i] * y[i] - 2.0 * x[i] * y[i]);
    }
    return s;
}

EscapeResult escape_direction_search(const ParticleEnsemble& mu, const KernelSpec& k,
                                     bool full_sweep) {
    const EigenDecomposition eig = eigen_symmetric(k.A);
    const HypothesisReport hyp = check_theorem31_hypotheses(eig);
    if (!hyp.ok) throw HypothesisError("eigenvalue hypotheses fail: " + hyp.detail);
    EscapeResult res;
    const int limit = full_sweep ? k.dim() : 3;
    for (int i = 0; i < limit; ++i) {
        const VariationReport rep =
            second_variation_at_critical(mu, k, eig.eigenvectors[i]);
        if (rep.second_variation > 1e-10) {
            res.found = true;
            res.direction = eig.eigenvectors[i];
            res.value = rep.second_variation;
            res.eigen_index = i;
            return res;
        }
    }
    return res;
}

InequalityVerdict pl_inequality_check(const ParticleEnsemble& mu, double beta,
                                      std::span<const double> u, double alpha) {
    const double ca = std::cos(alpha);
    for (int i = 0; i < mu.size(); ++i)
        if (dot(mu.point(i), u) < ca - 1e-12)
            throw SupportError("an atom lies outside the stated cap");
    const bool regime = 10.0 * (1.0 + std::sqrt(std::max(beta, 0.0))) * std::tan(alpha) <= 1.0;
    const double lhs = energy_simple_dirac(beta) - energy_simple(mu, beta);
    const KernelSpec k = make_simple_attention(beta, mu.d);
    const double rhs = 10.0 * std::exp(-beta) * dissipation(mu, k);
    return make_verdict("pl_cap", 0.0, lhs, rhs, 1e-12 * std::max(1.0, std::abs(rhs)),
                        regime);
}

std::vector<InequalityVerdict> entropy_production_check(const TrajectoryRecord& traj,
                                                        const KernelSpec& k, double alpha,
                                                        double tol) {
    const bool regime = k.epsilon_phi() <= 0.01 && alpha > 0.0 && alpha < M_PI / 20.0;
    std::vector<InequalityVerdict> out;
    for (const auto& s : traj.snapshots) {
        if (!s.q_rate || !s.cap_plus) continue;
        const double outside = 1.0 - *s.cap_plus;
        out.push_back(make_verdict("entropy_production", s.t, *s.q_rate,
                                   -s.I + 100.0 * outside, tol, regime));
    }
    return out;
}

HemisphereCriticalReport hemisphere_critical_test(const ParticleEnsemble& mu,
                                                  const KernelSpec& k,
                                                  std::span<const double> U, double alpha) {
    if (!(alpha < M_PI / 2)) throw RangeError("hemisphere test needs alpha < pi/2");
    const double ca = std::cos(alpha);
    for (int i = 0; i < mu.size(); ++i)
        if (dot(mu.point(i), U) < ca - 1e-12)
            throw SupportError("an atom lies outside the stated cap");
    HemisphereCriticalReport rep;
    rep.I = dissipation(mu, k);
    rep.is_critical = rep.I <= 1e-16;
    const MeanOrder mo = mean_and_order(mu);
    if (mo.u_defined) {
        rep.is_dirac = w2_to_dirac(mu, mo.U) <= 1e-6;
    } else {
        rep.is_dirac = false;
    }
    rep.consistent = !rep.is_critical || rep.is_dirac;
    return rep;
}

SynchronizationConstants theorem39_constants(double R0, int d, double l2_norm_sq) {
    if (!(R0 > 0.0 && R0 <= 1.0)) throw RangeError("R0 must lie in (0, 1]");
    if (d < 2) throw DimensionError("needs d >= 2");
    if (!(l2_norm_sq > 0.0)) throw RangeError("l2 norm must be positive");
    SynchronizationConstants c;
    const double lead = std::max(8.0 / R0, static_cast<double>(d - 1));
    // log-safe: assemble in logs where the powers could overflow
    const double log_r = std::log(R0);
    const double t1 = std::exp(std::log(1e41) + std::log(static_cast<double>(d - 1)) -
                               14.0 * log_r);
    const double t2 = 1e26 * std::exp(-6.0 * log_r) * std::log(l2_norm_sq);
    c.T0 = lead * (t1 + t2);
    c.decay_rate = (d - 1) / 16.0;
    c.amplitude = std::sqrt(l2_norm_sq);
    return c;
}

AttractorDiagnostics attractor_diagnostics(std::span<const double> markers, int d,
                                           double seeded_mass) {
    AttractorDiagnostics diag;
    const int m = static_cast<int>(markers.size()) / d;
    diag.mass = seeded_mass;
    double dmin = 1.0;
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
            const double c = dot(
                markers.subspan(static_cast<std::size_t>(i) * d, d),
                markers.subspan(static_cast<std::size_t>(j) * d, d));
            dmin = std::min(dmin, c);
        }
    diag.D = std::clamp(dmin, -1.0, 1.0);
    diag.Gamma = seeded_mass * (1.0 + diag.D) - 1.0;
    diag.valid = diag.D > std::sqrt(2.0) / 2.0;
    return diag;
}

RateFit rate_fit(const std::vector<std::pair<double, double>>& series, double t_start) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& [t, v] : series)
        if (t >= t_start && v > 0.0) pts.push_back({t, std::log(v)});
    if (pts.size() < 10)
        throw InsufficientDataError("rate fit needs at least 10 positive samples");
    double st = 0.0, sy = 0.0;
    for (const auto& [t, y] : pts) {
        st += t;
        sy += y;
    }
    const double n = static_cast<double>(pts.size());
    const double mt = st / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [t, y] : pts) {
        sxx += (t - mt) * (t - mt);
        sxy += (t - mt) * (y - my);
        syy += (y - my) * (y - my);
    }
    RateFit fit;
    const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
    fit.rate = -slope;
    fit.intercept = my - slope * mt;
    if (syy <= 1e-30) {
        fit.r_squared = 1.0;  // constant series: the fit is exact
    } else {
        double ssres = 0.0;
        for (const auto& [t, y] : pts) {
            const double pred = fit.intercept + slope * t;
            ssres += (y - pred) * (y - pred);
        }
        fit.r_squared = 1.0 - ssres / syy;
    }
    return fit;
}

}  // namespace sphereflow

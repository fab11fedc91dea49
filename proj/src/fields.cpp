#include "sphereflow/fields.hpp"

#include <cmath>

#include "sphereflow/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sphereflow {

namespace {

// Accumulate m = sum_j w_j phi'(<Ax, y_j>) B y_j with B = I (General) or
// B = A (Gradient), then project: out = m - <x, m> x. Projection after the
// sum is exact for these fields because P_x is linear.
void eval_one(const SourceSet& nu, const KernelSpec& k, FieldMode mode,
              std::span<const double> x, std::span<double> out,
              std::span<const double> ay_flat) {
    const int d = nu.d;
    Vec z;
    const double* zp = x.data();
    double zscale = 1.0;
    if (k.a_scalar) {
        zscale = k.a_scale;  // <Ax, y> = a <x, y>
    } else {
        z = k.A.apply(x);
        zp = z.data();
    }
    thread_local std::vector<Kahan> acc;
    acc.assign(d, Kahan{});
    const int n = nu.size();
    for (int j = 0; j < n; ++j) {
        const double* y = nu.x.data() + static_cast<std::size_t>(j) * d;
        double c = 0.0;
        for (int t = 0; t < d; ++t) c += zp[t] * y[t];
        if (k.a_scalar) c *= zscale;
        const double wphi = nu.w[j] * k.phi_prime(c);
        if (wphi == 0.0) continue;
        const double* src = mode == FieldMode::General
                                ? y
                                : ay_flat.data() + static_cast<std::size_t>(j) * d;
        for (int t = 0; t < d; ++t) acc[t].add(wphi * src[t]);
    }
    double xdotm = 0.0;
    for (int t = 0; t < d; ++t) xdotm += x[t] * acc[t].value();
    for (int t = 0; t < d; ++t) out[t] = acc[t].value() - xdotm * x[t];
}

// Gradient mode with a non-scalar A needs A y_j; precompute once per batch.
std::vector<double> premultiplied_sources(const SourceSet& nu, const KernelSpec& k,
                                          FieldMode mode) {
    std::vector<double> ay;
    if (mode != FieldMode::Gradient) return ay;
    const int d = nu.d;
    ay.resize(nu.x.size());
    for (int j = 0; j < nu.size(); ++j) {
        const double* y = nu.x.data() + static_cast<std::size_t>(j) * d;
        for (int i = 0; i < d; ++i) {
            double s = 0.0;
            if (k.a_scalar) {
                s = k.a_scale * y[i];
            } else {
                for (int t = 0; t < d; ++t) s += k.A(i, t) * y[t];
            }
            ay[static_cast<std::size_t>(j) * d + i] = s;
        }
    }
    return ay;
}

}  // namespace

void velocity_batch_serial(const SourceSet& nu, const KernelSpec& k, FieldMode mode,
                           std::span<const double> targets, int n_targets,
                           std::span<double> out) {
    const int d = nu.d;
    const auto ay = premultiplied_sources(nu, k, mode);
    for (int i = 0; i < n_targets; ++i) {
        eval_one(nu, k, mode,
                 targets.subspan(static_cast<std::size_t>(i) * d, d),
                 out.subspan(static_cast<std::size_t>(i) * d, d),
                 {ay.data(), ay.size()});
    }
}

void velocity_batch(const SourceSet& nu, const KernelSpec& k, FieldMode mode,
                    std::span<const double> targets, int n_targets,
                    std::span<double> out) {
    const int d = nu.d;
    const auto ay = premultiplied_sources(nu, k, mode);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n_targets; ++i) {
        eval_one(nu, k, mode,
                 targets.subspan(static_cast<std::size_t>(i) * d, d),
                 out.subspan(static_cast<std::size_t>(i) * d, d),
                 {ay.data(), ay.size()});
    }
}

Vec velocity_general(const SourceSet& nu, const KernelSpec& k, std::span<const double> at) {
    Vec out(nu.d, 0.0);
    velocity_batch_serial(nu, k, FieldMode::General, at, 1, out);
    return out;
}

Vec velocity_gradient(const SourceSet& nu, const KernelSpec& k, std::span<const double> at) {
    Vec out(nu.d, 0.0);
    velocity_batch_serial(nu, k, FieldMode::Gradient, at, 1, out);
    return out;
}

Vec velocity_simple(const ParticleEnsemble& mu, double beta, std::span<const double> at) {
    const KernelSpec k = make_simple_attention(beta, mu.d);
    return velocity_general(sources(mu), k, at);
}

std::pair<Vec, Vec> kuramoto_part_and_perturbation(const ParticleEnsemble& mu,
                                                   const KernelSpec& k,
                                                   std::span<const double> at) {
    const Vec y = velocity_general(sources(mu), k, at);
    std::vector<Kahan> macc(mu.d);
    for (int j = 0; j < mu.size(); ++j)
        for (int t = 0; t < mu.d; ++t)
            macc[t].add(mu.w[j] * mu.x[static_cast<std::size_t>(j) * mu.d + t]);
    Vec m(mu.d);
    for (int t = 0; t < mu.d; ++t) m[t] = macc[t].value();
    Vec v = project_tangent(at, m);
    Vec w = sub(y, v);
    return {std::move(v), std::move(w)};
}

double velocity_circle(const ParticleEnsemble& mu, double beta, double theta) {
    if (mu.d != 2) throw DimensionError("circle velocity needs d = 2");
    Kahan s;
    for (int j = 0; j < mu.size(); ++j) {
        const double omega = angle_of(mu.point(j));
        const double delta = theta - omega;
        s.add(-mu.w[j] * std::sin(delta) * std::exp(beta * std::cos(delta)));
    }
    return s.value();
}

double velocity_circle(const CircleDensity& f, double beta, double theta) {
    const double dtheta = f.cell_width();
    Kahan s;
    for (int k = 0; k < f.N; ++k) {
        if (f.values[k] == 0.0) continue;
        const double delta = theta - f.cell_center(k);
        s.add(-f.values[k] * dtheta * std::sin(delta) * std::exp(beta * std::cos(delta)));
    }
    return s.value();
}

std::vector<double> circle_velocity_table(const CircleDensity& f, double beta,
                                          bool at_interfaces) {
    const int N = f.N;
    const double dtheta = f.cell_width();
    const int half = N / 2;
    // K[m] = sin(delta_m) e^{beta cos(delta_m)} at separation delta_m, with the
    // exact oddness K(-delta) = -K(delta) built in by only evaluating m > 0.
    std::vector<double> kern(half + 1, 0.0);
    if (at_interfaces) {
        for (int m = 0; m <= half; ++m) {
            const double delta = (m + 0.5) * dtheta;
            kern[m] = std::sin(delta) * std::exp(beta * std::cos(delta));
        }
    } else {
        for (int m = 1; m <= half; ++m) {
            const double delta = m * dtheta;
            kern[m] = std::sin(delta) * std::exp(beta * std::cos(delta));
        }
        if (N % 2 == 0) kern[half] = 0.0;  // sin(pi) exactly
    }
    std::vector<double> v(N, 0.0);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < N; ++i) {
        Kahan s;
        if (at_interfaces) {
            // Interface i+1/2: pair cells i-m and i+1+m at distance (m+1/2).
            for (int m = 0; m <= half - 1; ++m) {
                const int left = (i - m + N) % N;
                const int right = (i + 1 + m) % N;
                const double diff = f.values[left] - f.values[right];
                if (diff != 0.0) s.add(-kern[m] * diff * dtheta);
            }
            if (N % 2 == 1) {
                const int opp = (i + 1 + half) % N;
                s.add(-kern[half] * (-f.values[opp]) * dtheta);
            }
        } else {
            for (int m = 1; m <= half - (N % 2 == 0 ? 1 : 0); ++m) {
                const int left = (i - m + N) % N;
                const int right = (i + m) % N;
                const double diff = f.values[left] - f.values[right];
                if (diff != 0.0) s.add(-kern[m] * diff * dtheta);
            }
        }
        v[i] = s.value();
    }
    return v;
}

Vec gnomonic_pullback_field(const GnomonicChart& chart, const SourceSet& nu,
                            const KernelSpec& k, std::span<const double> u) {
    const int d = nu.d;
    const Vec fu = chart.inverse(u);
    const double su = std::sqrt(1.0 + norm2(u));
    std::vector<Kahan> acc(d - 1);
    for (int j = 0; j < nu.size(); ++j) {
        const Vec vj = chart.forward(nu.point(j));
        const double sv = std::sqrt(1.0 + norm2(vj));
        const Vec fv = chart.inverse(vj);
        double c = 0.0;
        if (k.a_scalar) {
            c = k.a_scale * dot(fu, fv);
        } else {
            c = dot(k.A.apply(fu), fv);
        }
        const double wphi = nu.w[j] * k.phi_prime(c) * su / sv;
        for (int t = 0; t < d - 1; ++t) acc[t].add(wphi * (vj[t] - u[t]));
    }
    Vec out(d - 1);
    for (int t = 0; t < d - 1; ++t) out[t] = acc[t].value();
    return out;
}

}  // namespace sphereflow

#include "sphereflow/sphere.hpp"

#include <algorithm>
#include <cmath>

#include "sphereflow/errors.hpp"

namespace sphereflow {

Vec make_sphere_point(Vec coords) {
    if (coords.size() < 2) throw DimensionError("sphere points need d >= 2");
    const double n = norm(coords);
    if (std::abs(n - 1.0) > 1e-12)
        throw RangeError("sphere point is not unit length");
    for (double& v : coords) v /= n;
    return coords;
}

Vec project_tangent(std::span<const double> x, std::span<const double> y) {
    const double c = dot(x, y);
    Vec r(y.begin(), y.end());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= c * x[i];
    return r;
}

double geodesic_distance(std::span<const double> x, std::span<const double> y) {
    const double c = std::clamp(dot(x, y), -1.0, 1.0);
    return std::acos(c);
}

GnomonicChart::GnomonicChart(Vec north) : north_(make_sphere_point(std::move(north))) {
    const int d = dim();
    fallback_ = north_[d - 1] < -1.0 + 1e-12;
    if (!fallback_) {
        // axis of the minimal rotation taking e_d to the pole; the frame is
        // the identity at the pole e_d itself and degenerates only at -e_d.
        // 1 + n_d is evaluated cancellation-free near the singular pole.
        w_.assign(north_.begin(), north_.end());
        const double nd = north_[d - 1];
        if (nd > 0.0) {
            w_[d - 1] = 1.0 + nd;
        } else {
            double sumsq = 0.0;
            for (int i = 0; i < d - 1; ++i) sumsq += north_[i] * north_[i];
            w_[d - 1] = sumsq / (1.0 - nd);
        }
        normalize_in_place(w_);
    }
}

// R = I - 2 w w^T + 2 n e_d^T with w = (n + e_d)/|n + e_d| maps e_d to the
// pole n; the identity when n = e_d.
Vec GnomonicChart::from_chart_frame(std::span<const double> y) const {
    const int d = dim();
    if (fallback_) {
        Vec out(y.begin(), y.end());
        out[d - 1] = -out[d - 1];
        return out;
    }
    const double c = 2.0 * dot(w_, y);
    Vec out(y.begin(), y.end());
    for (int i = 0; i < d; ++i) out[i] -= c * w_[i];
    for (int i = 0; i < d; ++i) out[i] += 2.0 * y[d - 1] * north_[i];
    return out;
}

Vec GnomonicChart::to_chart_frame(std::span<const double> x) const {
    const int d = dim();
    if (fallback_) {
        Vec out(x.begin(), x.end());
        out[d - 1] = -out[d - 1];
        return out;
    }
    const double c = 2.0 * dot(w_, x);
    Vec out(x.begin(), x.end());
    for (int i = 0; i < d; ++i) out[i] -= c * w_[i];
    out[d - 1] += 2.0 * dot(north_, x);
    return out;
}

Vec GnomonicChart::forward(std::span<const double> x) const {
    const int d = dim();
    if (dot(north_, x) <= 0.0)
        throw PoleHemisphereError("gnomonic projection needs <x, north> > 0");
    const Vec y = to_chart_frame(x);
    Vec u(d - 1);
    for (int i = 0; i < d - 1; ++i) u[i] = y[i] / y[d - 1];
    return u;
}

Vec GnomonicChart::inverse(std::span<const double> u) const {
    const int d = dim();
    Vec y(d, 0.0);
    const double s = 1.0 / std::sqrt(1.0 + norm2(u));
    for (int i = 0; i < d - 1; ++i) y[i] = u[i] * s;
    y[d - 1] = s;
    return from_chart_frame(y);
}

Vec GnomonicChart::tangent_map(std::span<const double> u, std::span<const double> X) const {
    const int d = dim();
    const double u2 = norm2(u);
    const double xu = dot(X, u);
    const double denom = std::sqrt((1.0 + u2) * (1.0 + u2) * (1.0 + u2));
    Vec y(d, 0.0);
    for (int i = 0; i < d - 1; ++i) y[i] = ((1.0 + u2) * X[i] - xu * u[i]) / denom;
    y[d - 1] = -xu / denom;
    return from_chart_frame(y);
}

std::vector<double> sample_uniform_sphere(int d, int n, std::uint64_t seed) {
    if (d < 2) throw DimensionError("sample_uniform_sphere needs d >= 2");
    if (n < 1) throw RangeError("sample_uniform_sphere needs n >= 1");
    Rng rng(seed);
    std::vector<double> out(static_cast<std::size_t>(n) * d);
    for (int i = 0; i < n; ++i) {
        Vec p = rng.sphere_point(d);
        std::copy(p.begin(), p.end(), out.begin() + static_cast<std::size_t>(i) * d);
    }
    return out;
}

}  // namespace sphereflow

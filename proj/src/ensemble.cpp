#include "sphereflow/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "sphereflow/errors.hpp"
#include "sphereflow/rng.hpp"
#include "sphereflow/sphere.hpp"

namespace sphereflow {

void ParticleEnsemble::validate() const {
    if (d < 2) throw DimensionError("ensemble needs d >= 2");
    if (w.empty() || x.size() != w.size() * static_cast<std::size_t>(d))
        throw RangeError("ensemble sizes are inconsistent");
    Kahan total;
    for (double wi : w) {
        if (!(wi > 0.0)) throw RangeError("ensemble weights must be positive");
        total.add(wi);
    }
    if (std::abs(total.value() - 1.0) > 1e-12)
        throw RangeError("ensemble weights must sum to 1");
    for (int i = 0; i < size(); ++i)
        if (std::abs(norm(point(i)) - 1.0) > 1e-12)
            throw RangeError("ensemble atom is not unit length");
}

ParticleEnsemble make_ensemble(int d, std::vector<double> coords, std::vector<double> weights) {
    ParticleEnsemble e;
    e.d = d;
    e.x = std::move(coords);
    e.w = std::move(weights);
    e.validate();
    return e;
}

double CircleDensity::total_mass() const {
    Kahan s;
    for (double v : values) s.add(v);
    return s.value() * cell_width();
}

void CircleDensity::validate() const {
    if (N < 1 || values.size() != static_cast<std::size_t>(N))
        throw RangeError("circle density size mismatch");
    for (double v : values)
        if (v < 0.0) throw RangeError("circle density must be nonnegative");
    if (std::abs(total_mass() - 1.0) > 1e-10)
        throw RangeError("circle density must integrate to 1");
}

Vec circle_point(double theta) { return {std::cos(theta), std::sin(theta)}; }

double angle_of(std::span<const double> p) { return std::atan2(p[1], p[0]); }

ParticleEnsemble make_example_2_4(double xi) {
    if (!(xi > 0.0 && xi < 0.01))
        throw RangeError("example 2.4 needs xi in (0, 1/100)");
    const double s = std::sin(xi);
    const double c = std::cos(xi);
    ParticleEnsemble e;
    e.d = 2;
    e.x = {0.0, 1.0, -s, -c, s, -c};
    e.w = {1.0 / 50.0, 49.0 / 100.0, 49.0 / 100.0};
    e.validate();
    return e;
}

ParticleEnsemble make_example_2_1(double eps) {
    if (!(eps > 0.0 && eps < 1.0))
        throw RangeError("example 2.1 needs eps in (0, 1)");
    ParticleEnsemble e;
    e.d = 2;
    e.x = {0.0, 1.0, 0.0, -1.0};
    e.w = {1.0 - eps, eps};
    e.validate();
    return e;
}

namespace {

// Compactly supported mollifier exp(-1/(1-(t/h)^2)) on (-h, h).
double bump(double t, double h) {
    const double r = t / h;
    const double q = 1.0 - r * r;
    if (q <= 0.0) return 0.0;
    return std::exp(-1.0 / q);
}

}  // namespace

CircleDensity make_example_2_6(double eta, double xi, int N) {
    if (!(eta > 0.0 && eta < 0.01) || !(xi > 0.0 && xi < 0.01))
        throw RangeError("example 2.6 needs eta, xi in (0, 1/100)");
    if (N * eta < 8.0 || N * xi < 8.0)
        throw SupportOverlapError("grid too coarse to separate the two bumps");
    if (N % 2 != 0)
        throw RangeError("example 2.6 needs an even grid so both bumps sit on cells");
    CircleDensity f;
    f.N = N;
    f.values.assign(N, 0.0);
    const double dtheta = f.cell_width();
    // Distances are computed from cell indices so mirrored cells get exactly
    // equal values; the velocity evaluation depends on that symmetry.
    std::vector<double> h1(N, 0.0), h2(N, 0.0);
    Kahan m1, m2;
    for (int k = 0; k < N; ++k) {
        const int k0 = std::min(k, N - k);
        const double d0 = 2.0 * M_PI * k0 / N;
        h1[k] = bump(d0, eta);
        m1.add(h1[k]);
        const int kpi = std::abs(k - N / 2);
        const double dpi = 2.0 * M_PI * kpi / N;
        h2[k] = bump(dpi, xi);
        m2.add(h2[k]);
    }
    if (m1.value() <= 0.0 || m2.value() <= 0.0)
        throw SupportOverlapError("bump mass vanished on the grid");
    const double c1 = (1.0 / 3.0) / (m1.value() * dtheta);
    const double c2 = (2.0 / 3.0) / (m2.value() * dtheta);
    for (int k = 0; k < N; ++k) {
        if (h1[k] > 0.0 && h2[k] > 0.0)
            throw SupportOverlapError("bump supports overlap on the grid");
        f.values[k] = c1 * h1[k] + c2 * h2[k];
    }
    f.validate();
    return f;
}

ParticleEnsemble sample_from_circle_density(const CircleDensity& f, int n, std::uint64_t seed) {
    f.validate();
    if (n < 1) throw RangeError("need n >= 1 samples");
    const int N = f.N;
    const double dtheta = f.cell_width();
    std::vector<double> cdf(N + 1, 0.0);
    for (int k = 0; k < N; ++k) cdf[k + 1] = cdf[k] + f.values[k] * dtheta;
    const double total = cdf[N];
    Rng rng(seed);
    ParticleEnsemble e;
    e.d = 2;
    e.x.resize(static_cast<std::size_t>(n) * 2);
    e.w.assign(n, 1.0 / n);
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform() * total;
        const int k = static_cast<int>(
            std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin() - 1);
        const int kc = std::min(k, N - 1);
        const double frac = f.values[kc] > 0.0
                                ? (u - cdf[kc]) / (f.values[kc] * dtheta)
                                : 0.5;
        // Cell kc covers [center - dtheta/2, center + dtheta/2).
        const double theta = f.cell_center(kc) + (frac - 0.5) * dtheta;
        e.x[2 * i] = std::cos(theta);
        e.x[2 * i + 1] = std::sin(theta);
    }
    e.validate();
    return e;
}

ParticleEnsemble uniform_ensemble(int d, int n, std::uint64_t seed) {
    ParticleEnsemble e;
    e.d = d;
    e.x = sample_uniform_sphere(d, n, seed);
    e.w.assign(n, 1.0 / n);
    e.validate();
    return e;
}

ParticleEnsemble cap_uniform_ensemble(int d, int n, std::span<const double> center,
                                      double alpha, std::uint64_t seed) {
    if (!(alpha > 0.0 && alpha < M_PI / 2))
        throw RangeError("cap angle must lie in (0, pi/2)");
    Rng rng(seed);
    ParticleEnsemble e;
    e.d = d;
    e.x.resize(static_cast<std::size_t>(n) * d);
    e.w.assign(n, 1.0 / n);
    const double ca = std::cos(alpha);
    const double s2 = 1.0 - ca * ca;
    // Frame mapping e_d to the cap center (identity when they coincide).
    Vec wref;
    const bool rotate = std::abs(center[d - 1] - 1.0) > 1e-15 ||
                        std::abs(norm2(center) - 1.0) > 1e-12;
    if (rotate) {
        wref.assign(center.begin(), center.end());
        wref[d - 1] += 1.0;
        normalize_in_place(wref);
    }
    for (int i = 0; i < n; ++i) {
        // Height z = <x, e_d> has density (1-z^2)^((d-3)/2) on [cos a, 1];
        // rejection against its maximum at z = cos a. For d = 3 this is exact
        // with no rejection; d = 2 picks the angle directly.
        Vec p(d, 0.0);
        if (d == 2) {
            const double theta = alpha * (2.0 * rng.uniform() - 1.0);
            p[0] = std::sin(theta);
            p[1] = std::cos(theta);
        } else {
            double z = 1.0;
            for (;;) {
                z = ca + (1.0 - ca) * rng.uniform();
                const double ratio = (1.0 - z * z) / s2;
                const double acc =
                    d == 3 ? 1.0 : std::pow(std::max(ratio, 0.0), 0.5 * (d - 3));
                if (rng.uniform() < acc) break;
            }
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            Vec omega = rng.sphere_point(d - 1);
            for (int k = 0; k < d - 1; ++k) p[k] = r * omega[k];
            p[d - 1] = z;
        }
        if (rotate) {
            const double c2 = 2.0 * dot(wref, p);
            for (int k = 0; k < d; ++k) p[k] = c2 * wref[k] - p[k];
        }
        normalize_in_place(p);
        std::copy(p.begin(), p.end(), e.x.begin() + static_cast<std::size_t>(i) * d);
    }
    e.validate();
    return e;
}

ParticleEnsemble tilted_ensemble(int d, int n, double a, std::uint64_t seed) {
    if (!(a > -1.0 && a < 1.0)) throw RangeError("tilt must lie in (-1, 1)");
    Rng rng(seed);
    ParticleEnsemble e;
    e.d = d;
    e.x.resize(static_cast<std::size_t>(n) * d);
    e.w.assign(n, 1.0 / n);
    for (int i = 0; i < n; ++i) {
        for (;;) {
            Vec p = rng.sphere_point(d);
            const double accept = (1.0 + a * p[d - 1]) / (1.0 + std::abs(a));
            if (rng.uniform() < accept) {
                std::copy(p.begin(), p.end(), e.x.begin() + static_cast<std::size_t>(i) * d);
                break;
            }
        }
    }
    e.validate();
    return e;
}

std::string ensemble_to_json(const ParticleEnsemble& e) {
    nlohmann::json j;
    j["d"] = e.d;
    auto pts = nlohmann::json::array();
    for (int i = 0; i < e.size(); ++i) {
        auto row = nlohmann::json::array();
        for (int k = 0; k < e.d; ++k) row.push_back(e.x[static_cast<std::size_t>(i) * e.d + k]);
        pts.push_back(std::move(row));
    }
    j["points"] = std::move(pts);
    j["weights"] = e.w;
    return j.dump();
}

ParticleEnsemble ensemble_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    ParticleEnsemble e;
    e.d = j.at("d").get<int>();
    for (const auto& row : j.at("points"))
        for (const auto& v : row) e.x.push_back(v.get<double>());
    e.w = j.at("weights").get<std::vector<double>>();
    e.validate();
    return e;
}

std::string circle_density_to_json(const CircleDensity& f) {
    nlohmann::json j;
    j["N"] = f.N;
    j["values"] = f.values;
    return j.dump();
}

CircleDensity circle_density_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    CircleDensity f;
    f.N = j.at("N").get<int>();
    f.values = j.at("values").get<std::vector<double>>();
    f.validate();
    return f;
}

ParticleEnsemble ensemble_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<double> row;
        std::string cell;
        bool numeric = true;
        while (std::getline(ls, cell, ',')) {
            try {
                std::size_t used = 0;
                const double v = std::stod(cell, &used);
                row.push_back(v);
            } catch (...) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (rows.empty()) continue;  // header line
            throw RangeError("non-numeric CSV row: " + line);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw RangeError("CSV holds no atoms");
    const int d = static_cast<int>(rows[0].size()) - 1;
    if (d < 2) throw DimensionError("CSV atoms need d >= 2 coordinates plus weight");
    ParticleEnsemble e;
    e.d = d;
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != d + 1)
            throw RangeError("CSV rows have inconsistent arity");
        for (int k = 0; k < d; ++k) e.x.push_back(row[k]);
        e.w.push_back(row[d]);
    }
    e.validate();
    return e;
}

}  // namespace sphereflow

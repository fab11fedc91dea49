#include "sphereflow/observables.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "sphereflow/errors.hpp"

namespace sphereflow {

double energy_simple_dirac(double beta) {
    if (beta == 0.0) throw BetaZeroError("energy_simple needs beta != 0");
    return std::exp(beta) / (2.0 * beta);
}

double energy_simple(const ParticleEnsemble& mu, double beta) {
    if (beta == 0.0) throw BetaZeroError("energy_simple needs beta != 0");
    const int n = mu.size();
    const int d = mu.d;
    std::vector<double> partial(n, 0.0);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const double* xi = mu.x.data() + static_cast<std::size_t>(i) * d;
        Kahan s;
        for (int j = 0; j < n; ++j) {
            const double* xj = mu.x.data() + static_cast<std::size_t>(j) * d;
            double c = 0.0;
            for (int t = 0; t < d; ++t) c += xi[t] * xj[t];
            s.add(mu.w[j] * std::exp(beta * c));
        }
        partial[i] = mu.w[i] * s.value();
    }
    Kahan total;
    for (double p : partial) total.add(p);
    return total.value() / (2.0 * beta);
}

double energy_general(const ParticleEnsemble& mu, const KernelSpec& k) {
    if (!k.has_phi())
        throw MissingAntiderivativeError("energy_general needs the antiderivative phi");
    const int n = mu.size();
    const int d = mu.d;
    std::vector<double> partial(n, 0.0);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const double* xi = mu.x.data() + static_cast<std::size_t>(i) * d;
        const Vec axi = k.a_scalar ? Vec{} : k.A.apply({xi, static_cast<std::size_t>(d)});
        Kahan s;
        for (int j = 0; j < n; ++j) {
            const double* xj = mu.x.data() + static_cast<std::size_t>(j) * d;
            double c = 0.0;
            if (k.a_scalar) {
                for (int t = 0; t < d; ++t) c += xi[t] * xj[t];
                c *= k.a_scale;
            } else {
                for (int t = 0; t < d; ++t) c += axi[t] * xj[t];
            }
            s.add(mu.w[j] * k.phi(c));
        }
        partial[i] = mu.w[i] * s.value();
    }
    Kahan total;
    for (double p : partial) total.add(p);
    return 0.5 * total.value();
}

MeanOrder mean_and_order(const ParticleEnsemble& mu) {
    MeanOrder out;
    std::vector<Kahan> acc(mu.d);
    for (int j = 0; j < mu.size(); ++j)
        for (int t = 0; t < mu.d; ++t)
            acc[t].add(mu.w[j] * mu.x[static_cast<std::size_t>(j) * mu.d + t]);
    out.M.resize(mu.d);
    for (int t = 0; t < mu.d; ++t) out.M[t] = acc[t].value();
    out.R = norm(out.M);
    if (out.R > 1e-12) {
        out.U = scaled(out.M, 1.0 / out.R);
        out.u_defined = true;
    }
    return out;
}

MeanOrder mean_and_order(const CircleDensity& f) {
    MeanOrder out;
    Kahan cx, cy;
    const double dtheta = f.cell_width();
    for (int k = 0; k < f.N; ++k) {
        if (f.values[k] == 0.0) continue;
        const double th = f.cell_center(k);
        cx.add(f.values[k] * dtheta * std::cos(th));
        cy.add(f.values[k] * dtheta * std::sin(th));
    }
    out.M = {cx.value(), cy.value()};
    out.R = norm(out.M);
    if (out.R > 1e-12) {
        out.U = scaled(out.M, 1.0 / out.R);
        out.u_defined = true;
    }
    return out;
}

double dissipation_unnormalized(const SourceSet& nu, const KernelSpec& k) {
    const int n = nu.size();
    const int d = nu.d;
    std::vector<double> y(static_cast<std::size_t>(n) * d, 0.0);
    velocity_batch(nu, k, FieldMode::General, nu.x, n, {y.data(), y.size()});
    Kahan s;
    for (int i = 0; i < n; ++i) {
        double n2 = 0.0;
        for (int t = 0; t < d; ++t) {
            const double v = y[static_cast<std::size_t>(i) * d + t];
            n2 += v * v;
        }
        s.add(nu.w[i] * n2);
    }
    return s.value();
}

double dissipation(const ParticleEnsemble& mu, const KernelSpec& k, FieldMode mode) {
    const int n = mu.size();
    const int d = mu.d;
    std::vector<double> y(static_cast<std::size_t>(n) * d, 0.0);
    velocity_batch(sources(mu), k, mode, {mu.x.data(), mu.x.size()}, n,
                   {y.data(), y.size()});
    Kahan s;
    for (int i = 0; i < n; ++i) {
        double n2 = 0.0;
        for (int t = 0; t < d; ++t) {
            const double v = y[static_cast<std::size_t>(i) * d + t];
            n2 += v * v;
        }
        s.add(mu.w[i] * n2);
    }
    return s.value();
}

double dissipation(const CircleDensity& f, double beta) {
    const std::vector<double> v = circle_velocity_table(f, beta, false);
    Kahan s;
    const double dtheta = f.cell_width();
    for (int k = 0; k < f.N; ++k)
        if (f.values[k] != 0.0) s.add(f.values[k] * dtheta * v[k] * v[k]);
    return s.value();
}

double q_double_sum(const SourceSet& nu, const KernelSpec& k) {
    const int n = nu.size();
    const int d = nu.d;
    std::vector<double> y(static_cast<std::size_t>(n) * d, 0.0);
    velocity_batch(nu, k, FieldMode::General, nu.x, n, {y.data(), y.size()});
    // Ax_i and |Y_i|^2 once per atom.
    std::vector<double> ax(static_cast<std::size_t>(n) * d);
    std::vector<double> y2(n);
    for (int i = 0; i < n; ++i) {
        const double* xi = nu.x.data() + static_cast<std::size_t>(i) * d;
        double* axi = ax.data() + static_cast<std::size_t>(i) * d;
        if (k.a_scalar) {
            for (int t = 0; t < d; ++t) axi[t] = k.a_scale * xi[t];
        } else {
            const Vec v = k.A.apply({xi, static_cast<std::size_t>(d)});
            std::copy(v.begin(), v.end(), axi);
        }
        y2[i] = norm2({y.data() + static_cast<std::size_t>(i) * d,
                       static_cast<std::size_t>(d)});
    }
    std::vector<double> partial(n, 0.0);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const double* xi = nu.x.data() + static_cast<std::size_t>(i) * d;
        const double* axi = ax.data() + static_cast<std::size_t>(i) * d;
        const double* yi = y.data() + static_cast<std::size_t>(i) * d;
        Kahan s;
        for (int j = 0; j < n; ++j) {
            const double* xj = nu.x.data() + static_cast<std::size_t>(j) * d;
            const double* axj = ax.data() + static_cast<std::size_t>(j) * d;
            const double* yj = y.data() + static_cast<std::size_t>(j) * d;
            double c_xy = 0.0, c_axy = 0.0, yi_axj = 0.0, yj_axi = 0.0;
            double yi_xj = 0.0, yi_yj = 0.0;
            for (int t = 0; t < d; ++t) {
                c_xy += xi[t] * xj[t];
                c_axy += axi[t] * xj[t];
                yi_axj += yi[t] * axj[t];
                yj_axi += yj[t] * axi[t];
                yi_xj += yi[t] * xj[t];
                yi_yj += yi[t] * yj[t];
            }
            const double q = 2.0 * (yi_axj + yj_axi) * yi_xj * k.phi_double_prime(c_axy) +
                             (2.0 * yi_yj - c_xy * (y2[i] + y2[j])) * k.phi_prime(c_axy);
            s.add(nu.w[j] * q);
        }
        partial[i] = nu.w[i] * s.value();
    }
    Kahan total;
    for (double p : partial) total.add(p);
    return total.value();
}

double dissipation_rate(const ParticleEnsemble& mu, const KernelSpec& k) {
    return q_double_sum(sources(mu), k);
}

CapMasses cap_masses(const ParticleEnsemble& mu, std::span<const double> U, double alpha) {
    const double ca = std::cos(alpha);
    Kahan plus, minus;
    for (int j = 0; j < mu.size(); ++j) {
        const double c = dot(mu.point(j), U);
        if (c >= ca) plus.add(mu.w[j]);
        if (-c >= ca) minus.add(mu.w[j]);
    }
    CapMasses out;
    out.plus = plus.value();
    out.minus = minus.value();
    out.equatorial = 1.0 - out.plus - out.minus;
    return out;
}

CapMasses cap_masses(const CircleDensity& f, std::span<const double> U, double alpha) {
    const double ca = std::cos(alpha);
    const double dtheta = f.cell_width();
    Kahan plus, minus;
    for (int k = 0; k < f.N; ++k) {
        if (f.values[k] == 0.0) continue;
        const double th = f.cell_center(k);
        const double c = std::cos(th) * U[0] + std::sin(th) * U[1];
        if (c >= ca) plus.add(f.values[k] * dtheta);
        if (-c >= ca) minus.add(f.values[k] * dtheta);
    }
    CapMasses out;
    out.plus = plus.value();
    out.minus = minus.value();
    out.equatorial = 1.0 - out.plus - out.minus;
    return out;
}

double xi_cutoff(double a, double alpha1, double alpha2) {
    if (!(alpha1 >= 0.0 && alpha1 < alpha2 && alpha2 <= M_PI))
        throw RangeError("cutoff needs 0 <= alpha1 < alpha2 <= pi");
    const double hi = std::cos(alpha1), lo = std::cos(alpha2);
    const double t = std::clamp((a - lo) / (hi - lo), 0.0, 1.0);
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

double xi_cutoff_derivative(double a, double alpha1, double alpha2) {
    if (!(alpha1 >= 0.0 && alpha1 < alpha2 && alpha2 <= M_PI))
        throw RangeError("cutoff needs 0 <= alpha1 < alpha2 <= pi");
    const double hi = std::cos(alpha1), lo = std::cos(alpha2);
    if (a <= lo || a >= hi) return 0.0;
    const double t = (a - lo) / (hi - lo);
    return 30.0 * t * t * (1.0 - t) * (1.0 - t) / (hi - lo);
}

double xi_cutoff_mass(const ParticleEnsemble& mu, std::span<const double> U,
                      double alpha1, double alpha2) {
    Kahan s;
    for (int j = 0; j < mu.size(); ++j)
        s.add(mu.w[j] * xi_cutoff(-dot(mu.point(j), U), alpha1, alpha2));
    return s.value();
}

double xi_cutoff_mass(const CircleDensity& f, std::span<const double> U,
                      double alpha1, double alpha2) {
    Kahan s;
    const double dtheta = f.cell_width();
    for (int k = 0; k < f.N; ++k) {
        if (f.values[k] == 0.0) continue;
        const double th = f.cell_center(k);
        const double c = std::cos(th) * U[0] + std::sin(th) * U[1];
        s.add(f.values[k] * dtheta * xi_cutoff(-c, alpha1, alpha2));
    }
    return s.value();
}

double w2_to_dirac(const ParticleEnsemble& mu, std::span<const double> x0) {
    Kahan s;
    for (int j = 0; j < mu.size(); ++j) {
        const double dg = geodesic_distance(mu.point(j), x0);
        s.add(mu.w[j] * dg * dg);
    }
    return std::sqrt(s.value());
}

double w2_to_dirac(const CircleDensity& f, double theta0) {
    Kahan s;
    const double dtheta = f.cell_width();
    for (int k = 0; k < f.N; ++k) {
        if (f.values[k] == 0.0) continue;
        double delta = std::abs(f.cell_center(k) - theta0);
        delta = std::fmod(delta, 2.0 * M_PI);
        const double dg = std::min(delta, 2.0 * M_PI - delta);
        s.add(f.values[k] * dtheta * dg * dg);
    }
    return std::sqrt(s.value());
}

// ---- circular optimal transport ----

CircularAtoms circular_atoms(const ParticleEnsemble& mu) {
    if (mu.d != 2) throw DimensionError("circular transport needs d = 2");
    std::vector<std::pair<double, double>> rows(mu.size());
    for (int j = 0; j < mu.size(); ++j) {
        double th = angle_of(mu.point(j));
        if (th < 0.0) th += 2.0 * M_PI;
        rows[j] = {th, mu.w[j]};
    }
    std::sort(rows.begin(), rows.end());
    CircularAtoms out;
    for (auto& [th, w] : rows) {
        out.theta.push_back(th);
        out.w.push_back(w);
    }
    return out;
}

CircularAtoms circular_atoms(const CircleDensity& f) {
    CircularAtoms out;
    const double dtheta = f.cell_width();
    double total = 0.0;
    for (int k = 0; k < f.N; ++k) {
        if (f.values[k] <= 0.0) continue;
        out.theta.push_back(f.cell_center(k));
        out.w.push_back(f.values[k] * dtheta);
        total += f.values[k] * dtheta;
    }
    for (double& w : out.w) w /= total;
    return out;
}

namespace {

double circ_dist(double a, double b) {
    double delta = std::abs(a - b);
    delta = std::fmod(delta, 2.0 * M_PI);
    return std::min(delta, 2.0 * M_PI - delta);
}

// Quantile-coupling cost at mass shift s: pair F^{-1}(u) with G^{-1}((u+s) mod 1).
double shift_cost(const CircularAtoms& F, const CircularAtoms& G, double s) {
    s -= std::floor(s);
    const int m = static_cast<int>(F.w.size());
    const int n = static_cast<int>(G.w.size());
    // locate the G atom holding mass coordinate s
    int j = 0;
    double cum = 0.0;
    while (j < n - 1 && cum + G.w[j] <= s) cum += G.w[j++];
    double rem_g = cum + G.w[j] - s;
    int i = 0;
    double rem_f = F.w[0];
    double u = 0.0;
    Kahan cost;
    // each pass either consumes mass or advances an atom; the guard only
    // bounds pathological rounding stalls
    int guard = 4 * (m + n) + 16;
    while (u < 1.0 - 1e-15 && guard-- > 0) {
        const double seg = std::min({rem_f, rem_g, 1.0 - u});
        if (seg > 0.0) {
            const double dg = circ_dist(F.theta[i], G.theta[j]);
            cost.add(seg * dg * dg);
            u += seg;
            rem_f -= seg;
            rem_g -= seg;
        }
        bool advanced = false;
        if (rem_f <= 1e-18 && i < m - 1) {
            rem_f = F.w[++i];
            advanced = true;
        }
        if (rem_g <= 1e-18) {
            j = (j + 1) % n;
            rem_g = G.w[j];
            advanced = true;
        }
        if (seg <= 0.0 && !advanced) break;
    }
    return cost.value();
}

}  // namespace

double w2_circle(const CircularAtoms& mu, const CircularAtoms& nu) {
    if (mu.w.empty() || nu.w.empty()) throw RangeError("empty measure");
    auto cost = [&](double s) { return shift_cost(mu, nu, s); };

    double best = cost(0.0);
    auto consider = [&](double s) { best = std::min(best, cost(s)); };

    // exhaustive fallback grid
    const int grid = 2048;
    int best_cell = 0;
    for (int g = 1; g < grid; ++g) {
        const double c = cost(static_cast<double>(g) / grid);
        if (c < best) {
            best = c;
            best_cell = g;
        }
    }
    // ternary search, globally and around the best grid cell
    auto ternary = [&](double lo, double hi) {
        for (int it = 0; it < 200; ++it) {
            const double a = lo + (hi - lo) / 3.0;
            const double b = hi - (hi - lo) / 3.0;
            if (cost(a) <= cost(b))
                hi = b;
            else
                lo = a;
        }
        consider(0.5 * (lo + hi));
    };
    ternary(0.0, 1.0);
    ternary((best_cell - 1.5) / grid, (best_cell + 1.5) / grid);
    // exact candidates: the cost is piecewise linear in s with kinks where
    // quantile breakpoints collide
    const std::size_t mn = mu.w.size() * nu.w.size();
    if (mn <= 8192) {
        std::vector<double> cumF(mu.w.size()), cumG(nu.w.size());
        double a = 0.0;
        for (std::size_t i = 0; i < mu.w.size(); ++i) cumF[i] = (a += mu.w[i]);
        a = 0.0;
        for (std::size_t j = 0; j < nu.w.size(); ++j) cumG[j] = (a += nu.w[j]);
        for (double cf : cumF)
            for (double cg : cumG) {
                double s = cg - cf;
                s -= std::floor(s);
                consider(s);
            }
    }
    return std::sqrt(std::max(best, 0.0));
}

double w2_circle(const ParticleEnsemble& mu, const ParticleEnsemble& nu) {
    return w2_circle(circular_atoms(mu), circular_atoms(nu));
}

double l2_norm_sq(const CircleDensity& f) {
    Kahan s;
    for (double v : f.values) s.add(v * v);
    return s.value() * f.cell_width();
}

double f2_cap(const CircleDensity& f, std::span<const double> U, double alpha) {
    const double ca = std::cos(alpha);
    Kahan s;
    for (int k = 0; k < f.N; ++k) {
        if (f.values[k] == 0.0) continue;
        const double th = f.cell_center(k);
        const double c = std::cos(th) * U[0] + std::sin(th) * U[1];
        if (c >= ca) s.add(f.values[k] * f.values[k]);
    }
    return s.value() * f.cell_width();
}

double f2_arc(const CircleDensity& f, double lo, double hi) {
    auto wrap = [](double t) {
        t = std::fmod(t, 2.0 * M_PI);
        return t < 0.0 ? t + 2.0 * M_PI : t;
    };
    lo = wrap(lo);
    hi = wrap(hi);
    Kahan s;
    for (int k = 0; k < f.N; ++k) {
        if (f.values[k] == 0.0) continue;
        const double th = f.cell_center(k);
        const bool inside = lo <= hi ? (th >= lo && th < hi) : (th >= lo || th < hi);
        if (inside) s.add(f.values[k] * f.values[k]);
    }
    return s.value() * f.cell_width();
}

// ---- snapshots ----

ObservableSnapshot take_snapshot(double t, const ParticleEnsemble& mu,
                                 const KernelSpec& k, const SnapshotRequest& req) {
    ObservableSnapshot s;
    s.t = t;
    const MeanOrder mo = mean_and_order(mu);
    s.M = mo.M;
    s.R = mo.R;
    if (mo.u_defined) s.U = mo.U;
    s.I = dissipation(mu, k, req.mode);
    if (req.with_energy) {
        if (k.kind == KernelKind::SimpleAttention)
            s.E = energy_simple(mu, k.beta);
        else if (k.has_phi())
            s.E = energy_general(mu, k);
    }
    if (req.with_q_rate) s.q_rate = dissipation_rate(mu, k);
    if (req.cap_alpha && mo.u_defined) {
        const CapMasses cm = cap_masses(mu, mo.U, *req.cap_alpha);
        s.cap_plus = cm.plus;
        s.cap_minus = cm.minus;
    }
    if (req.xi_angles && mo.u_defined)
        s.xi_mass = xi_cutoff_mass(mu, mo.U, req.xi_angles->first, req.xi_angles->second);
    if (req.w2_ref_point) s.w2_to_ref = w2_to_dirac(mu, *req.w2_ref_point);
    return s;
}

ObservableSnapshot take_snapshot_circle(double t, const CircleDensity& f, double beta,
                                        const SnapshotRequest& req) {
    ObservableSnapshot s;
    s.t = t;
    const MeanOrder mo = mean_and_order(f);
    s.M = mo.M;
    s.R = mo.R;
    if (mo.u_defined) s.U = mo.U;
    s.I = dissipation(f, beta);
    s.l2 = l2_norm_sq(f);
    if (req.cap_alpha && mo.u_defined) {
        const CapMasses cm = cap_masses(f, mo.U, *req.cap_alpha);
        s.cap_plus = cm.plus;
        s.cap_minus = cm.minus;
        const Vec minusU = {-mo.U[0], -mo.U[1]};
        s.f2_cap_minus = f2_cap(f, minusU, *req.cap_alpha);
    }
    if (req.xi_angles && mo.u_defined)
        s.xi_mass = xi_cutoff_mass(f, mo.U, req.xi_angles->first, req.xi_angles->second);
    if (req.w2_ref_point)
        s.w2_to_ref = w2_to_dirac(f, std::atan2((*req.w2_ref_point)[1], (*req.w2_ref_point)[0]));
    return s;
}

void TrajectoryRecord::validate_times() const {
    for (std::size_t i = 1; i < snapshots.size(); ++i)
        if (!(snapshots[i].t > snapshots[i - 1].t))
            throw RangeError("trajectory times must be strictly increasing");
}

std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::string opt_field(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

}  // namespace

std::string trajectory_to_csv(const TrajectoryRecord& rec, int d) {
    std::ostringstream out;
    out << "t,E,R";
    for (int t = 0; t < d; ++t) out << ",U" << t;
    out << ",I,cap_plus,cap_minus,xi_mass,W2,l2,f2cap\n";
    for (const auto& s : rec.snapshots) {
        out << format_double(s.t) << ',' << opt_field(s.E) << ',' << format_double(s.R);
        for (int t = 0; t < d; ++t)
            out << ',' << (static_cast<int>(s.U.size()) == d ? format_double(s.U[t]) : std::string());
        out << ',' << format_double(s.I) << ',' << opt_field(s.cap_plus) << ','
            << opt_field(s.cap_minus) << ',' << opt_field(s.xi_mass) << ','
            << opt_field(s.w2_to_ref) << ',' << opt_field(s.l2) << ','
            << opt_field(s.f2_cap_minus) << '\n';
    }
    return out.str();
}

std::string trajectory_to_jsonl(const TrajectoryRecord& rec) {
    std::ostringstream out;
    for (const auto& s : rec.snapshots) {
        nlohmann::json j;
        j["t"] = s.t;
        if (s.E) j["E"] = *s.E;
        j["M"] = s.M;
        j["R"] = s.R;
        if (!s.U.empty()) j["U"] = s.U;
        j["I"] = s.I;
        if (s.q_rate) j["q_rate"] = *s.q_rate;
        if (s.cap_plus) j["cap_plus"] = *s.cap_plus;
        if (s.cap_minus) j["cap_minus"] = *s.cap_minus;
        if (s.xi_mass) j["xi_mass"] = *s.xi_mass;
        if (s.w2_to_ref) j["W2"] = *s.w2_to_ref;
        if (s.l2) j["l2"] = *s.l2;
        if (s.f2_cap_minus) j["f2cap"] = *s.f2_cap_minus;
        out << j.dump() << '\n';
    }
    return out.str();
}

}  // namespace sphereflow

#pragma once

#include <span>
#include <vector>

#include "sphereflow/linalg.hpp"
#include "sphereflow/rng.hpp"

namespace sphereflow {

// Geometry on S^{d-1} embedded in R^d. Points are plain coordinate vectors;
// make_sphere_point validates and renormalizes.

Vec make_sphere_point(Vec coords);  // checks d >= 2 and |norm-1| <= 1e-12

// P_x[y] = y - <x,y> x
Vec project_tangent(std::span<const double> x, std::span<const double> y);

// arccos of the clamped inner product, in [0, pi].
double geodesic_distance(std::span<const double> x, std::span<const double> y);

struct SphericalCap {
    Vec center;
    double angle;  // radians in (0, pi)

    // Closed cap: boundary points are inside.
    bool contains(std::span<const double> x) const {
        return dot(center, x) >= std::cos(angle);
    }
};

// Chart for the gnomonic projection with a chosen pole. The frame is the
// reflection 2 w w^T - I with w = (north + e_d)/|.|, which maps e_d to north
// and depends smoothly on the pole except at north = -e_d, where the fixed
// frame diag(1,...,1,-1) is used instead.
struct GnomonicChart {
    explicit GnomonicChart(Vec north);

    int dim() const { return static_cast<int>(north_.size()); }
    const Vec& north() const { return north_; }

    // G(x): chart coordinates in R^{d-1}; requires <x, north> > 0.
    Vec forward(std::span<const double> x) const;

    // F(u) = (u + e_d)/sqrt(1+|u|^2), rotated back to ambient coordinates.
    Vec inverse(std::span<const double> u) const;

    // dF_u(X), ambient vector tangent to the sphere at F(u).
    Vec tangent_map(std::span<const double> u, std::span<const double> X) const;

    Vec to_chart_frame(std::span<const double> x) const;    // ambient -> frame
    Vec from_chart_frame(std::span<const double> y) const;  // frame -> ambient

private:
    Vec north_;
    Vec w_;          // reflection axis, empty when the fallback frame is active
    bool fallback_;  // north == -e_d
};

// n i.i.d. uniform points, flattened row-major (n x d).
std::vector<double> sample_uniform_sphere(int d, int n, std::uint64_t seed);

}  // namespace sphereflow

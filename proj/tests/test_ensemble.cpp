#include <doctest.h>

#include <cmath>

#include "sphereflow/ensemble.hpp"
#include "sphereflow/errors.hpp"
#include "sphereflow/observables.hpp"

using namespace sphereflow;

TEST_SUITE_BEGIN("ensemble");

TEST_CASE("example 2.4 construction") {
    const double xi = 0.005;
    const ParticleEnsemble mu = make_example_2_4(xi);
    REQUIRE(mu.size() == 3);
    Kahan wsum;
    for (double w : mu.w) wsum.add(w);
    CHECK(wsum.value() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(mu.w[0] == 1.0 / 50.0);

    const MeanOrder mo = mean_and_order(mu);
    // mean points south with R = (49/50)cos(xi) - 1/50, mirror-exact in x
    CHECK(mo.M[0] == 0.0);
    const double want = (49.0 / 50.0) * std::cos(xi) - 1.0 / 50.0;
    CHECK(mo.R == doctest::Approx(want).epsilon(1e-14));
    CHECK(mo.R > 0.7);

    // atoms 2 and 3 are exact mirror images
    CHECK(mu.x[2] == -mu.x[4]);
    CHECK(mu.x[3] == mu.x[5]);

    CHECK_THROWS_AS(make_example_2_4(0.0), RangeError);
    CHECK_THROWS_AS(make_example_2_4(0.01), RangeError);

    // rational constants reproduce bit-identically
    const ParticleEnsemble again = make_example_2_4(xi);
    CHECK(mu.x == again.x);
    CHECK(mu.w == again.w);
}

TEST_CASE("example 2.1 construction") {
    const ParticleEnsemble mu = make_example_2_1(0.25);
    REQUIRE(mu.size() == 2);
    CHECK(mu.w[0] == 0.75);
    CHECK(angle_of(mu.point(0)) == doctest::Approx(M_PI / 2));
    CHECK(angle_of(mu.point(1)) == doctest::Approx(-M_PI / 2));
    CHECK_THROWS_AS(make_example_2_1(0.0), RangeError);
    CHECK_THROWS_AS(make_example_2_1(1.0), RangeError);
    CHECK(make_example_2_1(0.25).x == mu.x);
}

TEST_CASE("w2 to the dirac limit shrinks with eps in example 2.1") {
    const Vec north = {0.0, 1.0};
    double prev = 10.0;
    for (double eps : {0.5, 0.3, 0.2, 0.1, 0.05, 0.01}) {
        const double w2 = w2_to_dirac(make_example_2_1(eps), north);
        CHECK(w2 == doctest::Approx(std::sqrt(eps) * M_PI).epsilon(1e-12));
        CHECK(w2 < prev);
        prev = w2;
    }
}

TEST_CASE("example 2.6 construction") {
    const double eta = 0.008, xi = 0.008;
    const int N = 4096;
    const CircleDensity f = make_example_2_6(eta, xi, N);
    CHECK(std::abs(f.total_mass() - 1.0) <= 1e-10);

    // bump masses
    Kahan m0, mpi;
    for (int k = 0; k < N; ++k) {
        if (f.values[k] == 0.0) continue;
        const double th = f.cell_center(k);
        const double d0 = std::min(th, 2 * M_PI - th);
        if (d0 <= 2 * eta) m0.add(f.values[k] * f.cell_width());
        if (std::abs(th - M_PI) <= 2 * xi) mpi.add(f.values[k] * f.cell_width());
    }
    CHECK(std::abs(m0.value() - 1.0 / 3.0) <= 1e-6);
    CHECK(std::abs(mpi.value() - 2.0 / 3.0) <= 1e-6);

    const MeanOrder mo = mean_and_order(f);
    CHECK(std::abs(mo.R - 1.0 / 3.0) <= 2e-3);

    // grid symmetry about both bump centers, exact in floating point
    for (int k = 1; k < N / 2; ++k) CHECK(f.values[k] == f.values[N - k]);

    CHECK_THROWS_AS(make_example_2_6(0.0005, 0.008, 4096), SupportOverlapError);
    CHECK_THROWS_AS(make_example_2_6(0.02, 0.008, 4096), RangeError);
}

TEST_CASE("sampling from a circle density") {
    CircleDensity uniform;
    uniform.N = 256;
    uniform.values.assign(256, 1.0 / (2.0 * M_PI));
    uniform.validate();
    const int n = 4000;
    const ParticleEnsemble mu = sample_from_circle_density(uniform, n, 5);
    const MeanOrder mo = mean_and_order(mu);
    CHECK(mo.R <= 3.0 / std::sqrt(n));
    CHECK(sample_from_circle_density(uniform, n, 5).x == mu.x);

    // point-like density: every atom lands inside the hot cell
    CircleDensity spike;
    spike.N = 256;
    spike.values.assign(256, 0.0);
    spike.values[17] = 256.0 / (2.0 * M_PI);
    spike.validate();
    const ParticleEnsemble nu = sample_from_circle_density(spike, 500, 6);
    const double center = spike.cell_center(17);
    for (int i = 0; i < nu.size(); ++i)
        CHECK(std::abs(angle_of(nu.point(i)) - center) <= spike.cell_width());
}

TEST_CASE("type invariants are enforced") {
    CHECK_THROWS_AS(make_ensemble(2, {1.0, 0.0}, {0.5}), RangeError);  // bad sum
    CHECK_THROWS_AS(make_ensemble(2, {1.0, 0.0, 0.0, 2.0}, {0.5, 0.5}), RangeError);
    CHECK_THROWS_AS(make_ensemble(2, {1.0, 0.0, 0.0, 1.0}, {1.5, -0.5}), RangeError);

    CircleDensity f;
    f.N = 64;
    f.values.assign(64, 1.0);  // mass 2 pi * ... wrong normalization
    CHECK_THROWS_AS(f.validate(), RangeError);
}

TEST_CASE("json round trip") {
    const ParticleEnsemble mu = make_example_2_4(0.004);
    const ParticleEnsemble back = ensemble_from_json(ensemble_to_json(mu));
    CHECK(back.d == mu.d);
    CHECK(back.x == mu.x);
    CHECK(back.w == mu.w);

    const CircleDensity f = make_example_2_6(0.006, 0.008, 2048);
    const CircleDensity fb = circle_density_from_json(circle_density_to_json(f));
    CHECK(fb.N == f.N);
    CHECK(fb.values == f.values);
}

TEST_CASE("csv import") {
    const std::string text =
        "x0,x1,x2,w\n"
        "1,0,0,0.25\n"
        "0,1,0,0.25\n"
        "0,0,1,0.5\n";
    const ParticleEnsemble mu = ensemble_from_csv(text);
    CHECK(mu.d == 3);
    CHECK(mu.size() == 3);
    CHECK(mu.w[2] == 0.5);
    CHECK_THROWS_AS(ensemble_from_csv("1,0\n"), DimensionError);
    CHECK_THROWS_AS(ensemble_from_csv("1,0,0,0.5\n1,0,0.5\n"), RangeError);
}

TEST_CASE("cap and tilted samplers") {
    const Vec pole = {0.0, 0.0, 1.0};
    const double alpha = 0.3;
    const ParticleEnsemble mu = cap_uniform_ensemble(3, 400, pole, alpha, 9);
    for (int i = 0; i < mu.size(); ++i)
        CHECK(dot(mu.point(i), pole) >= std::cos(alpha) - 1e-12);
    CHECK(cap_uniform_ensemble(3, 400, pole, alpha, 9).x == mu.x);

    const ParticleEnsemble nu = tilted_ensemble(3, 6000, 0.9, 10);
    const MeanOrder mo = mean_and_order(nu);
    // mean of the density 1 + a<z, e3> is (a/3) e3
    CHECK(mo.M[2] == doctest::Approx(0.3).epsilon(0.2));
    CHECK(std::abs(mo.M[0]) <= 0.05);
}

TEST_SUITE_END();

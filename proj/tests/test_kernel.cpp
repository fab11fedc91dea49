#include <doctest.h>

#include <cmath>

#include "sphereflow/errors.hpp"
#include "sphereflow/kernel.hpp"
#include "sphereflow/rng.hpp"

using namespace sphereflow;

TEST_SUITE_BEGIN("kernel");

TEST_CASE("epsilon_phi closed forms") {
    CHECK(make_kuramoto(3).epsilon_phi() == 0.0);

    // sup|e^s - 1| = e^b - 1 and sup e^s = e^b on [-b, b]
    for (double beta : {0.01, 0.5, 1.0, 3.0}) {
        const double want = (beta + 2.0) * ((std::exp(beta) - 1.0) + std::exp(beta));
        CHECK(make_simple_attention(beta, 3).epsilon_phi() ==
              doctest::Approx(want).epsilon(1e-14));
    }

    // grid maximization on an equivalent custom kernel approaches the closed form
    const double beta = 1.0;
    const KernelSpec custom = make_custom(
        Matrix::identity(4, beta), [](double s) { return std::exp(s); },
        [](double s) { return std::exp(s); }, [](double s) { return std::exp(s); });
    const double closed = make_simple_attention(beta, 4).epsilon_phi();
    CHECK(custom.epsilon_phi() == doctest::Approx(closed).epsilon(1e-6));
    CHECK(custom.epsilon_phi() <= closed);  // grid sup cannot exceed the true sup
}

TEST_CASE("epsilon_phi is monotone in beta") {
    double prev = 0.0;
    for (double beta = 0.1; beta <= 3.01; beta += 0.1) {
        const double eps = make_simple_attention(beta, 3).epsilon_phi();
        CHECK(eps > prev);
        prev = eps;
    }
    prev = 0.0;
    for (double rate = 0.01; rate <= 0.5; rate += 0.01) {
        const double eps = make_exp_scaled(rate, 3).epsilon_phi();
        CHECK(eps > prev);
        prev = eps;
    }
}

TEST_CASE("the small-epsilon regime is reachable with the scaled kernel") {
    // With phi'(s) = e^(rate s) and A = I the epsilon shrinks like ~6 rate, so
    // rates near 1/600 land inside the 1/100 monitor regime.
    const double rate = exp_scaled_rate_for_epsilon(0.01);
    CHECK(make_exp_scaled(rate, 3).epsilon_phi() == doctest::Approx(0.01).epsilon(1e-9));
    CHECK(make_exp_scaled(rate * 0.9, 3).epsilon_phi() < 0.01);
}

TEST_CASE("phi antiderivative bookkeeping") {
    const KernelSpec k = make_custom(
        Matrix::identity(3), [](double) { return 1.0; }, [](double) { return 0.0; });
    CHECK_THROWS_AS(k.phi(0.3), MissingAntiderivativeError);
    CHECK(make_simple_attention(1.0, 3).phi(0.0) == 1.0);
    CHECK(make_kuramoto(3).phi(0.7) == 0.7);
}

TEST_CASE("phi' positivity is enforced for custom kernels") {
    CHECK_THROWS_AS(make_custom(Matrix::identity(3),
                                [](double s) { return s; },  // negative on [-1, 0)
                                [](double) { return 1.0; }),
                    RangeError);
}

namespace {

// Independent eigenvalue oracle: Sylvester inertia counting with bisection.
// The count of eigenvalues below sigma equals the number of negative pivots
// in the LDL^T factorization of A - sigma I.
int eigs_below(Matrix A, double sigma) {
    const int n = A.n;
    for (int i = 0; i < n; ++i) A(i, i) -= sigma;
    int neg = 0;
    for (int k = 0; k < n; ++k) {
        double piv = A(k, k);
        if (piv == 0.0) piv = 1e-300;
        if (piv < 0.0) ++neg;
        for (int i = k + 1; i < n; ++i) {
            const double f = A(i, k) / piv;
            for (int j = k + 1; j < n; ++j) A(i, j) -= f * A(k, j);
        }
    }
    return neg;
}

double extreme_eig(const Matrix& A, bool largest) {
    double lo = 1e300, hi = -1e300;
    for (int i = 0; i < A.n; ++i) {
        double r = 0.0;
        for (int j = 0; j < A.n; ++j)
            if (j != i) r += std::abs(A(i, j));
        lo = std::min(lo, A(i, i) - r);
        hi = std::max(hi, A(i, i) + r);
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const int c = eigs_below(A, mid);
        if (largest ? c == A.n : c == 0)
            (largest ? hi : lo) = mid;
        else
            (largest ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("operator norm") {
    CHECK(operator_norm(Matrix::identity(4)) == doctest::Approx(1.0));
    CHECK(operator_norm(Matrix::diag({3.0, 1.0, -5.0})) == doctest::Approx(5.0));

    Matrix bad(2);
    bad(0, 1) = 1.0;
    CHECK_THROWS_AS(operator_norm(bad), NonSymmetricError);

    // inertia-bisection oracle on random symmetric matrices
    Rng rng(21);
    for (int it = 0; it < 50; ++it) {
        const int d = 2 + static_cast<int>(rng.bits() % 6);
        Matrix A(d);
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) A(i, j) = A(j, i) = rng.normal();
        const double lambda =
            std::max(std::abs(extreme_eig(A, true)), std::abs(extreme_eig(A, false)));
        CHECK(operator_norm(A) == doctest::Approx(lambda).epsilon(1e-8));
    }
}

TEST_CASE("eigendecomposition reconstructs A") {
    Rng rng(22);
    for (int it = 0; it < 40; ++it) {
        const int d = 2 + static_cast<int>(rng.bits() % 6);
        Matrix A(d);
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) A(i, j) = A(j, i) = rng.normal();
        const EigenDecomposition e = eigen_symmetric(A);
        for (int i = 0; i + 1 < d; ++i) CHECK(e.eigenvalues[i] >= e.eigenvalues[i + 1]);
        Matrix recon(d);
        for (int k = 0; k < d; ++k)
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    recon(i, j) += e.eigenvalues[k] * e.eigenvectors[k][i] *
                                   e.eigenvectors[k][j];
        double dev = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) dev += (recon(i, j) - A(i, j)) * (recon(i, j) - A(i, j));
        CHECK(std::sqrt(dev) <= 1e-9 * std::max(1.0, A.frob()));
        // residual of the eigenpairs themselves
        for (int k = 0; k < d; ++k) {
            Vec r = A.apply(e.eigenvectors[k]);
            axpy(-e.eigenvalues[k], e.eigenvectors[k], r);
            CHECK(norm(r) <= 1e-10 * std::max(1.0, A.frob()));
        }
    }
}

TEST_CASE("top-three eigenvalue hypotheses") {
    CHECK(check_theorem31_hypotheses(eigen_symmetric(Matrix::identity(3))).ok);
    CHECK(check_theorem31_hypotheses(eigen_symmetric(Matrix::diag({2, 2, 2, -2}))).ok);
    const auto bad = check_theorem31_hypotheses(eigen_symmetric(Matrix::diag({3, 2, 2})));
    CHECK(!bad.ok);
    CHECK(bad.detail.find("lambda_1") != std::string::npos);
    CHECK(!check_theorem31_hypotheses(eigen_symmetric(Matrix::diag({2, 2, 2, -3}))).ok);
    CHECK_THROWS_AS(check_theorem31_hypotheses(eigen_symmetric(Matrix::identity(2))),
                    DimensionError);
}

TEST_CASE("simple attention rejects beta = 0") {
    CHECK_THROWS_AS(make_simple_attention(0.0, 3), BetaZeroError);
}

TEST_SUITE_END();

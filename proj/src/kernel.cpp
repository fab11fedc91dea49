#include "sphereflow/kernel.hpp"

#include <algorithm>
#include <cmath>

#include "sphereflow/errors.hpp"

namespace sphereflow {

EigenDecomposition eigen_symmetric(const Matrix& A) {
    const int n = A.n;
    Matrix m = A;
    Matrix v = Matrix::identity(n);
    const double scale = std::max(1.0, m.frob());
    for (int sweep = 0; sweep < 128; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += m(p, q) * m(p, q);
        if (std::sqrt(off) <= 1e-15 * scale) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = m(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double mkp = m(k, p), mkq = m(k, q);
                    m(k, p) = c * mkp - s * mkq;
                    m(k, q) = s * mkp + c * mkq;
                }
                for (int k = 0; k < n; ++k) {
                    const double mpk = m(p, k), mqk = m(q, k);
                    m(p, k) = c * mpk - s * mqk;
                    m(q, k) = s * mpk + c * mqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return m(a, a) > m(b, b); });
    EigenDecomposition out;
    out.eigenvalues.resize(n);
    out.eigenvectors.resize(n);
    for (int i = 0; i < n; ++i) {
        out.eigenvalues[i] = m(order[i], order[i]);
        Vec col(n);
        for (int k = 0; k < n; ++k) col[k] = v(k, order[i]);
        out.eigenvectors[i] = std::move(col);
    }
    return out;
}

double operator_norm(const Matrix& A) {
    if (!A.symmetric())
        throw NonSymmetricError("operator_norm expects a symmetric matrix");
    const EigenDecomposition e = eigen_symmetric(A);
    double m = 0.0;
    for (double l : e.eigenvalues) m = std::max(m, std::abs(l));
    return m;
}

namespace {

void finalize(KernelSpec& k) {
    if (!k.A.symmetric())
        throw NonSymmetricError("kernel matrix A must be symmetric");
    k.a_scalar = true;
    k.a_scale = k.A.n > 0 ? k.A(0, 0) : 0.0;
    for (int i = 0; i < k.A.n && k.a_scalar; ++i)
        for (int j = 0; j < k.A.n; ++j) {
            const double want = i == j ? k.a_scale : 0.0;
            if (k.A(i, j) != want) {
                k.a_scalar = false;
                break;
            }
        }
    k.a_norm = k.a_scalar ? std::abs(k.a_scale) : operator_norm(k.A);
}

}  // namespace

double KernelSpec::phi(double s) const {
    switch (form) {
        case PhiForm::One: return s;
        case PhiForm::Exp: return std::exp(s);
        case PhiForm::ExpScaled: return std::exp(rate * s) / rate;
        case PhiForm::Custom:
            if (!custom_phi)
                throw MissingAntiderivativeError(
                    "custom kernel has no antiderivative phi");
            return custom_phi(s);
    }
    return s;
}

double KernelSpec::epsilon_phi() const {
    const double a = a_norm;
    switch (form) {
        case PhiForm::One:
            return 0.0;
        case PhiForm::Exp:
            // sup|e^s - 1| = e^a - 1 and sup e^s = e^a on [-a, a]
            return (a + 2.0) * ((std::exp(a) - 1.0) + std::exp(a));
        case PhiForm::ExpScaled: {
            const double r = std::abs(rate);
            return (a + 2.0) * ((std::exp(r * a) - 1.0) + r * std::exp(r * a));
        }
        case PhiForm::Custom: {
            const int grid = 10000;
            double sup1 = 0.0, sup2 = 0.0;
            for (int i = 0; i <= grid; ++i) {
                const double s = -a + 2.0 * a * static_cast<double>(i) / grid;
                sup1 = std::max(sup1, std::abs(custom_phi_prime(s) - 1.0));
                sup2 = std::max(sup2, std::abs(custom_phi_double_prime(s)));
            }
            return (a + 2.0) * (sup1 + sup2);
        }
    }
    return 0.0;
}

KernelSpec make_simple_attention(double beta, int d) {
    if (beta == 0.0)
        throw BetaZeroError("simple attention needs beta != 0; use the Kuramoto kernel");
    KernelSpec k;
    k.kind = KernelKind::SimpleAttention;
    k.form = PhiForm::Exp;
    k.beta = beta;
    k.A = Matrix::identity(d, beta);
    finalize(k);
    return k;
}

KernelSpec make_kuramoto(int d) {
    KernelSpec k;
    k.kind = KernelKind::Kuramoto;
    k.form = PhiForm::One;
    k.A = Matrix::identity(d);
    finalize(k);
    return k;
}

KernelSpec make_exp_scaled(double rate, int d) {
    KernelSpec k;
    k.kind = KernelKind::Custom;
    k.form = PhiForm::ExpScaled;
    k.rate = rate;
    k.A = Matrix::identity(d);
    finalize(k);
    return k;
}

KernelSpec make_custom(Matrix A, std::function<double(double)> phi_prime,
                       std::function<double(double)> phi_double_prime,
                       std::function<double(double)> phi) {
    KernelSpec k;
    k.kind = KernelKind::Custom;
    k.form = PhiForm::Custom;
    k.A = std::move(A);
    k.custom_phi_prime = std::move(phi_prime);
    k.custom_phi_double_prime = std::move(phi_double_prime);
    k.custom_phi = std::move(phi);
    finalize(k);
    // phi' must stay positive on the closed interval the dynamics sample.
    const int grid = 1000;
    for (int i = 0; i <= grid; ++i) {
        const double s = -k.a_norm + 2.0 * k.a_norm * static_cast<double>(i) / grid;
        if (k.custom_phi_prime(s) <= 0.0)
            throw RangeError("phi' must be positive on [-|A|, |A|]");
    }
    return k;
}

double exp_scaled_rate_for_epsilon(double target_eps) {
    if (target_eps <= 0.0) throw RangeError("target epsilon must be positive");
    double lo = 0.0, hi = 1.0;
    auto eps = [](double r) {
        return 3.0 * ((std::exp(r) - 1.0) + r * std::exp(r));
    };
    while (eps(hi) < target_eps) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (eps(mid) < target_eps ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

HypothesisReport check_theorem31_hypotheses(const EigenDecomposition& eig) {
    const int d = static_cast<int>(eig.eigenvalues.size());
    if (d < 3) throw DimensionError("top-three eigenvalue condition needs d >= 3");
    const double tol = 1e-10;
    const double l1 = eig.eigenvalues[0];
    const double l3 = eig.eigenvalues[2];
    const double ld = eig.eigenvalues[d - 1];
    HypothesisReport r;
    r.ok = true;
    if (!(l1 > 0.0)) {
        r.ok = false;
        r.detail += "top eigenvalue is not positive; ";
    }
    if (std::abs(l1 - l3) > tol * std::max(1.0, std::abs(l1))) {
        r.ok = false;
        r.detail += "lambda_1 = lambda_2 = lambda_3 fails; ";
    }
    if (std::abs(ld) > l1 + tol * std::max(1.0, std::abs(l1))) {
        r.ok = false;
        r.detail += "|lambda_d| <= lambda fails; ";
    }
    if (r.ok) r.detail = "ok";
    return r;
}

}  // namespace sphereflow

#pragma once

#include <functional>
#include <string>

#include "sphereflow/linalg.hpp"

namespace sphereflow {

// Interaction kernel: the pair (phi', A) of the general dynamics, with phi''
// alongside for the second-order diagnostics. Only phi' and phi'' enter the
// evolution; the antiderivative phi is kept when known so the interaction
// energy can be evaluated.
//
// Built-in forms:
//   One        phi'(s) = 1                (Kuramoto; A = I)
//   Exp        phi'(s) = e^s              (simple attention; A = beta I)
//   ExpScaled  phi'(s) = e^(rate*s)       (attention with the temperature kept
//                                          inside phi'; A = I)
enum class PhiForm { One, Exp, ExpScaled, Custom };

enum class KernelKind { SimpleAttention, Kuramoto, Custom };

struct KernelSpec {
    KernelKind kind = KernelKind::Kuramoto;
    PhiForm form = PhiForm::One;
    Matrix A;
    double beta = 0.0;  // SimpleAttention parameter
    double rate = 1.0;  // ExpScaled parameter

    std::function<double(double)> custom_phi_prime;
    std::function<double(double)> custom_phi_double_prime;
    std::function<double(double)> custom_phi;  // optional antiderivative

    // Derived at construction.
    double a_norm = 0.0;   // ||A||_2
    bool a_scalar = false; // A = a_scale * I
    double a_scale = 0.0;

    int dim() const { return A.n; }

    double phi_prime(double s) const {
        switch (form) {
            case PhiForm::One: return 1.0;
            case PhiForm::Exp: return std::exp(s);
            case PhiForm::ExpScaled: return std::exp(rate * s);
            case PhiForm::Custom: return custom_phi_prime(s);
        }
        return 1.0;
    }

    double phi_double_prime(double s) const {
        switch (form) {
            case PhiForm::One: return 0.0;
            case PhiForm::Exp: return std::exp(s);
            case PhiForm::ExpScaled: return rate * std::exp(rate * s);
            case PhiForm::Custom: return custom_phi_double_prime(s);
        }
        return 0.0;
    }

    bool has_phi() const { return form != PhiForm::Custom || static_cast<bool>(custom_phi); }

    double phi(double s) const;  // MissingAntiderivativeError when unknown

    // epsilon_phi = (||A||_2 + 2) * (sup|phi'-1| + sup|phi''|) over
    // S = [-||A||_2, ||A||_2]; closed forms for the built-ins, a 10^4-point
    // grid plus endpoints otherwise.
    double epsilon_phi() const;
};

KernelSpec make_simple_attention(double beta, int d);
KernelSpec make_kuramoto(int d);
// A = I, phi'(s) = e^(rate*s); the small-epsilon attention parameterization.
KernelSpec make_exp_scaled(double rate, int d);
KernelSpec make_custom(Matrix A, std::function<double(double)> phi_prime,
                       std::function<double(double)> phi_double_prime,
                       std::function<double(double)> phi = nullptr);

// Smallest rate with epsilon_phi(make_exp_scaled(rate, d)) == target.
double exp_scaled_rate_for_epsilon(double target_eps);

struct HypothesisReport {
    bool ok = false;
    std::string detail;
};

// Top-three eigenvalue condition: lambda_1 = lambda_2 = lambda_3 = lambda > 0
// and |lambda_d| <= lambda, with tolerance 1e-10.
HypothesisReport check_theorem31_hypotheses(const EigenDecomposition& eig);

}  // namespace sphereflow

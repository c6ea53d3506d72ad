#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ptc {

/// A certified consensus-function tuple (Omega, Omega_hat, beta, d).
/// Omega is defined for z >= 0 and monotonically increasing; sign handling
/// lives in pt_map. log_omega / log_omega_hat evaluate ln Omega exactly in
/// closed form so large-argument comparisons can be done without overflow.
struct PtcFunction {
    std::function<double(double)> omega;
    std::function<double(double)> omega_hat;
    std::function<double(double)> log_omega;
    std::function<double(double)> log_omega_hat;
    std::function<double(int)> beta;
    double d = 1.0;
    std::string label;
};

/// Gamma function (Lanczos approximation, g = 7, 9 coefficients; reflection
/// formula below 0.5). Relative error < 1e-10 on (0, 30].
double gamma_fn(double z);
double log_gamma_fn(double z);

/// Omega(z) = (1/p) exp(z^p) z^(2-p), for 0 < p <= 1.
PtcFunction make_exp_p(double p);

/// Omega(z) = (pi/2) (exp(2z) - 1)^(1/2) z.
PtcFunction make_exp_sqrt();

/// Omega(z) = gamma z (a z^p + b z^q)^k with kp < 1 < kq, where the
/// normalizing constant gamma is built from Gamma-function values so that
/// the induced Psi integrates to one.
PtcFunction make_power_k(double a, double b, double p, double q, double k);

/// Power-form family with beta(n) = 1:
/// Omega(z) = gamma (a z^(p+1) + b n^((q-1)/2) z^(q+1)),
/// Omega_hat(z) = gamma (a z^(p+1) + b z^(q+1)), for p < 1 < q.
PtcFunction make_power_n(double a, double b, double p, double q, int n);

/// Numerically certifies that Phi(z) = z / Omega_hat(z) integrates to 1 over
/// (0, inf). Integrates [1e-12, tail_cutoff] by adaptive Simpson on a log
/// abscissa and closes both ends with local power-law estimates (the cutoff
/// is extended automatically while the estimated tail exceeds tol/2).
/// Returns |integral - 1|; certification passes iff the residual < tol.
double certify_assumption1(const PtcFunction& f, double tail_cutoff = 1e40,
                           double tol = 1e-3);

/// Samples `trials` random nonnegative vectors (componentwise log-uniform
/// magnitude over [1e-3, 1e3]) and returns the worst relative violation of
///   Omega_hat(beta(n) ||x||_2) <= beta(n)^d sum_i Omega(x_i).
/// Nonpositive means the inequality held on every sample.
double check_inequality6(const PtcFunction& f, int n, int trials,
                         std::uint64_t rng_seed);

/// True iff second divided differences over the grid are >= -1e-9 (scaled).
bool check_convexity(const std::function<double(double)>& omega,
                     const std::vector<double>& grid);

} // namespace ptc

#include "ptc/ptcfun.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "ptc/rng.hpp"

namespace ptc {

namespace {

constexpr double kLogClamp = 709.196; // ln(1e308)
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double exp_clamped(double log_value) {
    if (log_value > kLogClamp) return 1e308;
    return std::exp(log_value);
}

double logsumexp2(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
}

// ln(exp(y) - 1), stable for both small and large y.
double log_expm1(double y) {
    if (y > 36.0) return y; // expm1(y) == exp(y) to double precision
    return std::log(std::expm1(y));
}

std::function<double(double)> from_log(std::function<double(double)> log_fn) {
    return [log_fn = std::move(log_fn)](double z) {
        if (z <= 0.0) return 0.0;
        return exp_clamped(log_fn(z));
    };
}

} // namespace

double log_gamma_fn(double z) {
    if (!(z > 0.0)) throw std::domain_error("gamma_fn: argument must be positive");
    // Lanczos, g = 7, 9 coefficients.
    static const double kCoef[9] = {
        0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
        771.32342877765313,   -176.61502916214059,   12.507343278686905,
        -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
    if (z < 0.5) {
        // Reflection: Gamma(z) Gamma(1-z) = pi / sin(pi z).
        return std::log(M_PI / std::sin(M_PI * z)) - log_gamma_fn(1.0 - z);
    }
    const double x = z - 1.0;
    double acc = kCoef[0];
    for (int i = 1; i < 9; ++i) acc += kCoef[i] / (x + i);
    const double t = x + 7.5;
    return 0.5 * std::log(2.0 * M_PI) + (x + 0.5) * std::log(t) - t + std::log(acc);
}

double gamma_fn(double z) { return std::exp(log_gamma_fn(z)); }

PtcFunction make_exp_p(double p) {
    if (!(p > 0.0) || p > 1.0)
        throw std::invalid_argument("make_exp_p: requires 0 < p <= 1");
    auto log_omega = [p](double z) {
        if (z <= 0.0) return kNegInf;
        return std::pow(z, p) - std::log(p) + (2.0 - p) * std::log(z);
    };
    PtcFunction f;
    f.log_omega = log_omega;
    f.log_omega_hat = log_omega;
    f.omega = from_log(log_omega);
    f.omega_hat = f.omega;
    f.beta = [](int n) { return 1.0 / n; };
    f.d = 1.0;
    std::ostringstream label;
    label << "exp_p(p=" << p << ")";
    f.label = label.str();
    return f;
}

PtcFunction make_exp_sqrt() {
    auto log_omega = [](double z) {
        if (z <= 0.0) return kNegInf;
        return std::log(M_PI / 2.0) + 0.5 * log_expm1(2.0 * z) + std::log(z);
    };
    PtcFunction f;
    f.log_omega = log_omega;
    f.log_omega_hat = log_omega;
    f.omega = from_log(log_omega);
    f.omega_hat = f.omega;
    f.beta = [](int n) { return 1.0 / n; };
    f.d = 1.0;
    f.label = "exp_sqrt";
    return f;
}

PtcFunction make_power_k(double a, double b, double p, double q, double k) {
    if (!(a > 0.0 && b > 0.0 && p > 0.0 && q > 0.0 && k > 0.0))
        throw std::invalid_argument("make_power_k: parameters must be positive");
    if (!(k * p < 1.0 && k * q > 1.0))
        throw std::invalid_argument("make_power_k: requires kp < 1 and kq > 1");
    const double mp = (1.0 - k * p) / (q - p);
    const double mq = (k * q - 1.0) / (q - p);
    const double log_gamma_coef = log_gamma_fn(mp) + log_gamma_fn(mq) -
                                  k * std::log(a) - log_gamma_fn(k) -
                                  std::log(q - p) + mp * (std::log(a) - std::log(b));
    const double la = std::log(a), lb = std::log(b);
    auto log_omega = [log_gamma_coef, la, lb, p, q, k](double z) {
        if (z <= 0.0) return kNegInf;
        const double lz = std::log(z);
        return log_gamma_coef + lz + k * logsumexp2(la + p * lz, lb + q * lz);
    };
    PtcFunction f;
    f.log_omega = log_omega;
    f.log_omega_hat = log_omega;
    f.omega = from_log(log_omega);
    f.omega_hat = f.omega;
    f.beta = [](int n) { return 1.0 / n; };
    f.d = 1.0;
    std::ostringstream label;
    label << "power_k(a=" << a << ",b=" << b << ",p=" << p << ",q=" << q << ",k=" << k
          << ")";
    f.label = label.str();
    return f;
}

PtcFunction make_power_n(double a, double b, double p, double q, int n) {
    if (!(a > 0.0 && b > 0.0 && p > 0.0 && q > 0.0))
        throw std::invalid_argument("make_power_n: parameters must be positive");
    if (!(p < 1.0 && q > 1.0))
        throw std::invalid_argument("make_power_n: requires p < 1 and q > 1");
    if (n < 1) throw std::invalid_argument("make_power_n: requires n >= 1");
    const double mp = (1.0 - p) / (q - p);
    const double mq = (q - 1.0) / (q - p);
    const double log_gamma_coef = log_gamma_fn(mp) + log_gamma_fn(mq) - std::log(a) -
                                  std::log(q - p) + mp * (std::log(a) - std::log(b));
    const double la = std::log(a), lb = std::log(b);
    const double ln_scale = 0.5 * (q - 1.0) * std::log(static_cast<double>(n));
    auto log_omega = [log_gamma_coef, la, lb, p, q, ln_scale](double z) {
        if (z <= 0.0) return kNegInf;
        const double lz = std::log(z);
        return log_gamma_coef +
               logsumexp2(la + (p + 1.0) * lz, lb + ln_scale + (q + 1.0) * lz);
    };
    auto log_omega_hat = [log_gamma_coef, la, lb, p, q](double z) {
        if (z <= 0.0) return kNegInf;
        const double lz = std::log(z);
        return log_gamma_coef + logsumexp2(la + (p + 1.0) * lz, lb + (q + 1.0) * lz);
    };
    PtcFunction f;
    f.log_omega = log_omega;
    f.log_omega_hat = log_omega_hat;
    f.omega = from_log(log_omega);
    f.omega_hat = from_log(log_omega_hat);
    f.beta = [](int) { return 1.0; };
    f.d = 1.0;
    std::ostringstream label;
    label << "power_n(a=" << a << ",b=" << b << ",p=" << p << ",q=" << q << ",n=" << n
          << ")";
    f.label = label.str();
    return f;
}

namespace {

struct SimpsonState {
    long evals = 0;
    bool converged = true;
};

double adaptive_simpson(const std::function<double(double)>& fn, double lo, double hi,
                        double flo, double fmid, double fhi, double tol, int depth,
                        SimpsonState& st) {
    const double mid = 0.5 * (lo + hi);
    const double lmid = 0.5 * (lo + mid);
    const double rmid = 0.5 * (mid + hi);
    const double flmid = fn(lmid);
    const double frmid = fn(rmid);
    st.evals += 2;
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    const double left = (mid - lo) / 6.0 * (flo + 4.0 * flmid + fmid);
    const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frmid + fhi);
    const double err = left + right - whole;
    if (std::abs(err) <= 15.0 * tol || (hi - lo) < 1e-14)
        return left + right + err / 15.0;
    if (depth <= 0) {
        st.converged = false;
        return left + right;
    }
    return adaptive_simpson(fn, lo, mid, flo, flmid, fmid, 0.5 * tol, depth - 1, st) +
           adaptive_simpson(fn, mid, hi, fmid, frmid, fhi, 0.5 * tol, depth - 1, st);
}

} // namespace

double certify_assumption1(const PtcFunction& f, double tail_cutoff, double tol) {
    if (!(tail_cutoff > 1.0)) throw std::invalid_argument("certify_assumption1: cutoff");
    auto log_phi = [&f](double z) { return std::log(z) - f.log_omega_hat(z); };
    auto phi = [&log_phi](double z) { return std::exp(log_phi(z)); };

    const double eps = 1e-12;
    // Local power-law fit Phi ~ C z^-alpha closes the singular head. The
    // exponent is estimated from the log-slope at the endpoint.
    const double head_alpha = -(log_phi(2.0 * eps) - log_phi(eps)) / std::log(2.0);
    if (!(head_alpha < 1.0))
        throw std::runtime_error("certify_assumption1: non-integrable behavior near 0");
    const double head = phi(eps) * eps / (1.0 - head_alpha);

    // Same fit bounds the tail; extend the cutoff until the estimate is
    // below tol/2.
    double cutoff = tail_cutoff;
    double tail = 0.0;
    for (;;) {
        const double alpha = -(log_phi(2.0 * cutoff) - log_phi(cutoff)) / std::log(2.0);
        tail = (alpha > 1.0 + 1e-6) ? phi(cutoff) * cutoff / (alpha - 1.0)
                                    : std::numeric_limits<double>::infinity();
        if (tail < 0.5 * tol) break;
        cutoff *= 100.0;
        if (cutoff > 1e120)
            throw std::runtime_error("certify_assumption1: tail bound does not close");
    }

    // Integrate Phi(e^t) e^t over t in [ln eps, ln cutoff], panel by panel.
    auto integrand = [&log_phi](double t) { return std::exp(log_phi(std::exp(t)) + t); };
    const double t_lo = std::log(eps);
    const double t_hi = std::log(cutoff);
    const int panels = std::max(32, static_cast<int>(std::ceil(t_hi - t_lo)));
    const double panel_tol = 0.1 * tol / panels;
    SimpsonState st;
    double integral = 0.0;
    double t_prev = t_lo;
    double f_prev = integrand(t_lo);
    for (int i = 1; i <= panels; ++i) {
        const double t_next = t_lo + (t_hi - t_lo) * i / panels;
        const double f_next = integrand(t_next);
        const double f_mid = integrand(0.5 * (t_prev + t_next));
        st.evals += 2;
        integral += adaptive_simpson(integrand, t_prev, t_next, f_prev, f_mid, f_next,
                                     panel_tol, 40, st);
        t_prev = t_next;
        f_prev = f_next;
    }
    if (!st.converged) {
        std::ostringstream msg;
        msg << "certify_assumption1: quadrature did not converge for " << f.label
            << " (evals=" << st.evals << ", cutoff=" << cutoff << ")";
        throw std::runtime_error(msg.str());
    }
    return std::abs(head + integral + tail - 1.0);
}

double check_inequality6(const PtcFunction& f, int n, int trials,
                         std::uint64_t rng_seed) {
    if (n < 1) throw std::invalid_argument("check_inequality6: n >= 1 required");
    SplitMix64 rng(rng_seed);
    const double beta_n = f.beta(n);
    const double log_beta = std::log(beta_n);
    double worst = -std::numeric_limits<double>::infinity();
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int t = 0; t < trials; ++t) {
        double norm_sq = 0.0;
        for (auto& xi : x) {
            xi = std::pow(10.0, rng.uniform(-3.0, 3.0));
            norm_sq += xi * xi;
        }
        const double lhs_log = f.log_omega_hat(beta_n * std::sqrt(norm_sq));
        double rhs_log = kNegInf;
        for (double xi : x) rhs_log = logsumexp2(rhs_log, f.log_omega(xi));
        rhs_log += f.d * log_beta;
        // Relative violation; <= 0 means the inequality held.
        worst = std::max(worst, std::expm1(lhs_log - rhs_log));
    }
    return worst;
}

bool check_convexity(const std::function<double(double)>& omega,
                     const std::vector<double>& grid) {
    if (grid.size() < 3) throw std::invalid_argument("check_convexity: grid too small");
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
        const double z0 = grid[i - 1], z1 = grid[i], z2 = grid[i + 1];
        const double f0 = omega(z0), f1 = omega(z1), f2 = omega(z2);
        const double dd =
            2.0 * ((f2 - f1) / (z2 - z1) - (f1 - f0) / (z1 - z0)) / (z2 - z0);
        if (dd < -1e-9 * std::max(1.0, std::abs(f1))) return false;
    }
    return true;
}

} // namespace ptc

#include "ptc/protocol.hpp"

#include <cmath>
#include <stdexcept>

namespace ptc {

namespace {

// Summing several clamped edge terms can still overflow; keep the field
// finite so integrator stage arithmetic never produces inf - inf.
void clamp_components(Eigen::VectorXd& u, bool* clamped) {
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (u(i) > 1e308) {
            u(i) = 1e308;
            if (clamped) *clamped = true;
        } else if (u(i) < -1e308) {
            u(i) = -1e308;
            if (clamped) *clamped = true;
        }
    }
}

} // namespace

ProtocolConfig ProtocolConfig::uniform(ProtocolKind kind, int n, double kappa,
                                       PtcFunction ptc,
                                       std::optional<double> settling_bound) {
    ProtocolConfig cfg;
    cfg.kind = kind;
    cfg.kappa = Eigen::VectorXd::Constant(n, kappa);
    cfg.ptc = std::move(ptc);
    cfg.settling_bound = settling_bound;
    cfg.validate(n);
    return cfg;
}

void ProtocolConfig::validate(int n) const {
    if (kappa.size() != n)
        throw std::invalid_argument("ProtocolConfig: kappa dimension mismatch");
    if ((kappa.array() <= 0.0).any())
        throw std::invalid_argument("ProtocolConfig: gains must be positive");
    if (settling_bound && !(*settling_bound > 0.0))
        throw std::invalid_argument("ProtocolConfig: settling bound must be positive");
}

FamilyStats family_stats(const std::vector<WeightedGraph>& family) {
    if (family.empty()) throw std::invalid_argument("family_stats: empty family");
    FamilyStats stats;
    stats.lambda = std::numeric_limits<double>::infinity();
    stats.m_lo = std::numeric_limits<int>::max();
    stats.m_hi = 0;
    for (const auto& g : family) {
        stats.lambda = std::min(stats.lambda, algebraic_connectivity(g));
        stats.m_lo = std::min(stats.m_lo, g.edge_count());
        stats.m_hi = std::max(stats.m_hi, g.edge_count());
    }
    if (!(stats.lambda > 0.0))
        throw std::invalid_argument("family_stats: family contains a disconnected graph");
    return stats;
}

double pt_map(double e, const PtcFunction& f, bool* clamped) {
    const double mag = std::abs(e);
    if (mag <= 1e-300) return 0.0;
    const double log_value = f.log_omega(mag) - std::log(mag);
    double value;
    if (log_value > 709.196) {
        value = 1e308;
        if (clamped) *clamped = true;
    } else {
        value = std::exp(log_value);
    }
    return e > 0.0 ? value : -value;
}

Eigen::VectorXd drift_edgewise(const Eigen::VectorXd& x, const WeightedGraph& g,
                               const ProtocolConfig& cfg, bool* clamped) {
    if (x.size() != g.vertex_count())
        throw std::invalid_argument("drift_edgewise: dimension mismatch");
    Eigen::VectorXd u = Eigen::VectorXd::Zero(x.size());
    for (const auto& e : g.edges()) {
        const double s = std::sqrt(e.weight);
        // e_ij as seen from node i; the value seen from node j is its negation.
        const double v = pt_map(s * (x(e.j) - x(e.i)), cfg.ptc, clamped);
        u(e.i) += cfg.kappa(e.i) * s * v;
        u(e.j) -= cfg.kappa(e.j) * s * v;
    }
    clamp_components(u, clamped);
    return u;
}

Eigen::VectorXd drift_nodewise(const Eigen::VectorXd& x, const WeightedGraph& g,
                               const ProtocolConfig& cfg, bool* clamped) {
    if (x.size() != g.vertex_count())
        throw std::invalid_argument("drift_nodewise: dimension mismatch");
    Eigen::VectorXd agg = Eigen::VectorXd::Zero(x.size());
    for (const auto& e : g.edges()) {
        const double diff = x(e.j) - x(e.i);
        agg(e.i) += e.weight * diff;
        agg(e.j) -= e.weight * diff;
    }
    Eigen::VectorXd u(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
        u(i) = cfg.kappa(i) * pt_map(agg(i), cfg.ptc, clamped);
    clamp_components(u, clamped);
    return u;
}

Eigen::VectorXd drift(const Eigen::VectorXd& x, const WeightedGraph& g,
                      const ProtocolConfig& cfg, bool* clamped) {
    return cfg.kind == ProtocolKind::EdgeWise ? drift_edgewise(x, g, cfg, clamped)
                                              : drift_nodewise(x, g, cfg, clamped);
}

double gain_theorem2(const FamilyStats& stats, const PtcFunction& f,
                     double settling_bound) {
    if (!(stats.lambda > 0.0))
        throw std::invalid_argument("gain_theorem2: lambda must be positive");
    if (!(settling_bound > 0.0))
        throw std::invalid_argument("gain_theorem2: settling bound must be positive");
    const double beta_lo = f.beta(stats.m_lo);
    const double beta_hi = f.beta(stats.m_hi);
    return std::pow(beta_lo, f.d) / (stats.lambda * beta_hi * beta_hi * settling_bound);
}

double gain_theorem3(double lambda2, int n, const PtcFunction& f,
                     double settling_bound) {
    if (!(lambda2 > 0.0))
        throw std::invalid_argument("gain_theorem3: lambda2 must be positive");
    if (!(settling_bound > 0.0))
        throw std::invalid_argument("gain_theorem3: settling bound must be positive");
    return 1.0 / (lambda2 * std::pow(f.beta(n), 2.0 - f.d) * settling_bound);
}

} // namespace ptc

#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "ptc/graph.hpp"
#include "ptc/ptcfun.hpp"

namespace ptc {

enum class ProtocolKind {
    EdgeWise, // one nonlinearity evaluation per incident edge; conserves the mean
    NodeWise  // a single evaluation of the aggregated neighborhood error
};

struct ProtocolConfig {
    ProtocolKind kind = ProtocolKind::EdgeWise;
    Eigen::VectorXd kappa; // per-node gains, all > 0
    PtcFunction ptc;
    std::optional<double> settling_bound; // T_c when predefined time is claimed

    static ProtocolConfig uniform(ProtocolKind kind, int n, double kappa,
                                  PtcFunction ptc,
                                  std::optional<double> settling_bound = {});
    void validate(int n) const;
};

/// Worst-case quantities over a graph family: lambda = min algebraic
/// connectivity, m_lo / m_hi = min / max edge count.
struct FamilyStats {
    double lambda = 0.0;
    int m_lo = 0;
    int m_hi = 0;
};

FamilyStats family_stats(const std::vector<WeightedGraph>& family);

/// sign(e) * Omega(|e|) / |e|, with the removable singularity at 0 filled by
/// its limit value. Output magnitude is clamped at 1e308; `clamped`, when
/// given, is set if the clamp fired.
double pt_map(double e, const PtcFunction& f, bool* clamped = nullptr);

/// u_i = kappa_i sum_{j~i} sqrt(a_ij) pt_map(sqrt(a_ij)(x_j - x_i)).
/// Equals -D F(D^T x); conserves 1^T x.
Eigen::VectorXd drift_edgewise(const Eigen::VectorXd& x, const WeightedGraph& g,
                               const ProtocolConfig& cfg, bool* clamped = nullptr);

/// u_i = kappa_i pt_map(e_i) with e_i = sum_{j~i} a_ij (x_j - x_i) = -(Qx)_i.
Eigen::VectorXd drift_nodewise(const Eigen::VectorXd& x, const WeightedGraph& g,
                               const ProtocolConfig& cfg, bool* clamped = nullptr);

/// Dispatches on cfg.kind.
Eigen::VectorXd drift(const Eigen::VectorXd& x, const WeightedGraph& g,
                      const ProtocolConfig& cfg, bool* clamped = nullptr);

/// Gain lower bound for predefined-time average consensus on switching
/// networks: kappa = beta(m_lo)^d / (lambda beta(m_hi)^2 T_c).
double gain_theorem2(const FamilyStats& stats, const PtcFunction& f, double settling_bound);

/// Gain lower bound for predefined-time consensus on a static connected
/// graph: kappa = 1 / (lambda2 beta(n)^(2-d) T_c).
double gain_theorem3(double lambda2, int n, const PtcFunction& f, double settling_bound);

} // namespace ptc

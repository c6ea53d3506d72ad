#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <vector>

#include "ptc/graph.hpp"
#include "ptc/protocol.hpp"

namespace ptc {

struct IntegratorConfig {
    double t0 = 0.0;
    double step = 1e-4;         // sampling grid; default 1e-4 * T_c at call sites
    double horizon = 1.0;
    double settle_tol = -1.0;   // < 0 selects 1e-6 * disagreement(x0), floor 1e-12
    int max_substeps = 200000;  // per grid cell, guards against stalled integration

    void validate() const;
    double resolve_settle_tol(double initial_disagreement) const;
};

struct TraceDiagnostics {
    double v_maxmin = 0.0; // max(x) - min(x)
    double v_delta = 0.0;  // sqrt(lambda) beta(m_hi) ||x - mean(x0) 1||
    double mean_state = 0.0;
};

struct SimulationTrace {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
    std::vector<int> sigma;
    std::vector<TraceDiagnostics> diagnostics;
    double settle_tol = 0.0;
    std::optional<double> settled_at; // absolute time integration froze
    bool clamp_event = false;         // nonlinearity output hit the overflow clamp
};

double disagreement(const Eigen::VectorXd& x);

/// Integrates the switched consensus dynamics on a fixed sampling grid
/// (classical 4th-order steps). Switching breakpoints are snapped to the
/// grid, so every step sees a single topology. Inside a grid cell the step
/// is subdivided adaptively so no substage moves any node by more than a
/// fraction of the current disagreement; this keeps the scheme stable
/// through the sharp initial transient of the exponential-type drifts.
/// Once disagreement falls below settle_tol the state is frozen and the
/// remaining samples are recorded as constant.
SimulationTrace simulate(const SwitchedNetwork& net, const ProtocolConfig& cfg,
                         const Eigen::VectorXd& x0, const IntegratorConfig& icfg);

/// Static-topology convenience wrapper.
SimulationTrace simulate(const WeightedGraph& g, const ProtocolConfig& cfg,
                         const Eigen::VectorXd& x0, const IntegratorConfig& icfg);

/// Elapsed time after which disagreement stays below tol for the rest of the
/// trace; nullopt if it never does.
std::optional<double> settling_time(const SimulationTrace& trace, double tol);

/// CSV: `t,sigma,x_0,...,x_{n-1},V_maxmin,V_delta,mean`, 15 significant digits.
void write_trace_csv(const SimulationTrace& trace, std::ostream& out);
SimulationTrace read_trace_csv(std::istream& in);

} // namespace ptc
